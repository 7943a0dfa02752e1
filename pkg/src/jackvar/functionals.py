"""Plug-in functionals and their influence functions.

Two families are supported:

* smooth functions of the mean, ``T(m) = g(mean(m))``, with influence
  ``g'(mean)(x - mean)``;
* smooth trimmed L-functionals, ``L(p) = integral of P^{-1}(s) l(s) ds``
  for a continuous weight ``l`` supported on ``[alpha, 1-alpha]``, whose
  plug-in estimate is a weighted sum of order statistics and whose
  influence function is ``-integral of l(P(y)) (H_x - P)(y) dy``.

Built-in populations (normal, uniform, exponential) carry exact CDFs,
quantile functions, densities, and closed-form central moments so that
asymptotic oracles need no estimated inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, NumericalError
from .measures import EmpiricalMeasure
from .quadrature import adaptive_simpson, cumulative_gauss, refined_simpson

__all__ = [
    "SmoothMeanSpec",
    "WeightFunction",
    "TrimmedLSpec",
    "Functional",
    "PopulationSpec",
    "normal",
    "uniform",
    "exponential",
    "builtin_weight",
    "weight_cdf",
    "eval_functional",
    "influence",
    "influence_population_batch",
    "sigma2_population",
    "influence_sup_norm",
    "influence_sup_norm_empirical",
    "functional_from_key",
    "population_from_key",
]


@dataclass(frozen=True, eq=False)
class SmoothMeanSpec:
    """``T(m) = g(mean(m))`` for a C^1 function ``g``.

    ``g`` and its derivatives must accept numpy arrays.  ``g_second`` is
    only needed by the asymptotic-variance oracle, not by estimation.
    ``holder_order_h`` records the Holder order of ``g'`` (1 = Lipschitz).
    """

    g: Callable
    g_prime: Callable
    g_second: Callable | None = None
    holder_order_h: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not 0.0 < self.holder_order_h <= 1.0:
            raise ConfigError("holder_order_h must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Trimming weight ``l`` supported on ``[alpha, 1-alpha]``.

    ``exact_integral``, when given, is the antiderivative
    ``W(s) = integral of l over [0, s]`` in closed form; otherwise ``W`` is
    computed by adaptive Simpson quadrature.  ``ell`` and ``ell_prime``
    must accept numpy arrays.
    """

    alpha: float
    ell: Callable
    ell_prime: Callable
    exact_integral: Callable | None = None
    holder_order_h: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not 0.0 < self.alpha < 0.5:
            raise ConfigError("alpha must lie in (0, 1/2)")
        if not 0.0 < self.holder_order_h <= 1.0:
            raise ConfigError("holder_order_h must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class TrimmedLSpec:
    """Trimmed L-functional with a given weight function."""

    weight: WeightFunction
    label: str = ""


Functional = SmoothMeanSpec | TrimmedLSpec


def builtin_weight(name: str, alpha: float) -> WeightFunction:
    """Library-supplied weight families.

    ``raised_cosine``: ``l(s) = (1 + cos(2 pi (s - 1/2) / (1 - 2 alpha)))
    / (1 - 2 alpha)`` on ``[alpha, 1-alpha]``, zero elsewhere.  It is
    normalized (integral 1), vanishes together with its derivative at the
    support ends, and has a closed-form antiderivative, so ``l'`` is
    globally Lipschitz (Holder order 1).
    """
    if name != "raised_cosine":
        raise ConfigError(f"unknown weight family {name!r}")
    if not 0.0 < alpha < 0.5:
        raise ConfigError("alpha must lie in (0, 1/2)")
    width = 1.0 - 2.0 * alpha
    two_pi = 2.0 * math.pi

    def ell(s):
        s = np.asarray(s, dtype=float)
        inside = (s >= alpha) & (s <= 1.0 - alpha)
        t = two_pi * (s - 0.5) / width
        return np.where(inside, (1.0 + np.cos(t)) / width, 0.0)

    def ell_prime(s):
        s = np.asarray(s, dtype=float)
        inside = (s >= alpha) & (s <= 1.0 - alpha)
        t = two_pi * (s - 0.5) / width
        return np.where(inside, -(two_pi / width**2) * np.sin(t), 0.0)

    def exact_integral(s):
        s = np.asarray(s, dtype=float)
        clipped = np.clip(s, alpha, 1.0 - alpha)
        t = two_pi * (clipped - 0.5) / width
        # clip away sin(pi) rounding dust so W(0) == 0 and W(1) == 1 exactly
        return np.clip((clipped - alpha) / width + np.sin(t) / two_pi, 0.0, 1.0)

    return WeightFunction(
        alpha=alpha,
        ell=ell,
        ell_prime=ell_prime,
        exact_integral=exact_integral,
        holder_order_h=1.0,
        label=f"raised_cosine:alpha={alpha:g}",
    )


def weight_cdf(w: WeightFunction, s, *, tol: float = 1e-12):
    """``W(s) = integral of l over [0, s]``, vectorized over ``s``.

    Uses the closed form when available; otherwise accumulates adaptive
    Simpson integrals over the segments between the requested levels
    (each segment to absolute tolerance ``tol``).
    """
    s_arr = np.asarray(s, dtype=float)
    if w.exact_integral is not None:
        out = np.asarray(w.exact_integral(s_arr), dtype=float)
        return float(out) if np.isscalar(s) else out
    lo, hi = w.alpha, 1.0 - w.alpha
    clipped = np.clip(s_arr.ravel(), lo, hi)
    uniq, inverse = np.unique(clipped, return_inverse=True)
    cuts = uniq if uniq[0] == lo else np.concatenate(([lo], uniq))
    cum = np.empty(cuts.size)
    cum[0] = 0.0
    for k in range(1, cuts.size):
        cum[k] = cum[k - 1] + adaptive_simpson(
            lambda t: float(w.ell(t)), cuts[k - 1], cuts[k], tol=tol
        )
    offset = cuts.size - uniq.size
    vals = cum[inverse + offset].reshape(s_arr.shape)
    return float(vals) if np.isscalar(s) else vals


# --------------------------------------------------------------------------
# Built-in populations


@dataclass(frozen=True)
class PopulationSpec:
    """Closed family of sampling laws with exact moments.

    ``kind`` is one of ``normal`` (params mu, sigma), ``uniform``
    (params a, b), ``exponential`` (param rate).  All three are atomless
    with finite fourth moments.
    """

    kind: str
    params: tuple[float, ...]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            mu, sigma = self.params
            return ndtr((x - mu) / sigma)
        if self.kind == "uniform":
            a, b = self.params
            return np.clip((x - a) / (b - a), 0.0, 1.0)
        rate, = self.params
        return np.where(x > 0.0, -np.expm1(-rate * np.maximum(x, 0.0)), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            mu, sigma = self.params
            z = (x - mu) / sigma
            return np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))
        if self.kind == "uniform":
            a, b = self.params
            return np.where((x >= a) & (x <= b), 1.0 / (b - a), 0.0)
        rate, = self.params
        return np.where(x >= 0.0, rate * np.exp(-rate * np.maximum(x, 0.0)), 0.0)

    def quantile(self, s):
        s = np.asarray(s, dtype=float)
        if np.any((s <= 0.0) | (s >= 1.0)):
            raise ConfigError("population quantile level must lie in (0, 1)")
        if self.kind == "normal":
            mu, sigma = self.params
            out = mu + sigma * ndtri(s)
        elif self.kind == "uniform":
            a, b = self.params
            out = a + (b - a) * s
        else:
            rate, = self.params
            out = -np.log1p(-s) / rate
        return float(out) if out.ndim == 0 else out

    @property
    def mean(self) -> float:
        if self.kind == "normal":
            return self.params[0]
        if self.kind == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        return 1.0 / self.params[0]

    @property
    def mu2(self) -> float:
        if self.kind == "normal":
            return self.params[1] ** 2
        if self.kind == "uniform":
            return (self.params[1] - self.params[0]) ** 2 / 12.0
        return 1.0 / self.params[0] ** 2

    @property
    def mu3(self) -> float:
        if self.kind in ("normal", "uniform"):
            return 0.0
        return 2.0 / self.params[0] ** 3

    @property
    def mu4(self) -> float:
        if self.kind == "normal":
            return 3.0 * self.params[1] ** 4
        if self.kind == "uniform":
            return (self.params[1] - self.params[0]) ** 4 / 80.0
        return 9.0 / self.params[0] ** 4

    @property
    def label(self) -> str:
        if self.kind == "normal":
            return f"normal:mu={self.params[0]:g},sigma={self.params[1]:g}"
        if self.kind == "uniform":
            return f"uniform:a={self.params[0]:g},b={self.params[1]:g}"
        return f"exponential:rate={self.params[0]:g}"


def normal(mu: float, sigma: float) -> PopulationSpec:
    if sigma <= 0.0:
        raise ConfigError("normal population requires sigma > 0")
    return PopulationSpec("normal", (float(mu), float(sigma)))


def uniform(a: float, b: float) -> PopulationSpec:
    if b <= a:
        raise ConfigError("uniform population requires b > a")
    return PopulationSpec("uniform", (float(a), float(b)))


def exponential(rate: float) -> PopulationSpec:
    if rate <= 0.0:
        raise ConfigError("exponential population requires rate > 0")
    return PopulationSpec("exponential", (float(rate),))


# --------------------------------------------------------------------------
# Evaluation


def eval_functional(f: Functional, m: EmpiricalMeasure) -> float:
    """Plug-in value ``T`` at an empirical measure."""
    if isinstance(f, SmoothMeanSpec):
        return float(f.g(float(m.values.mean())))
    w = f.weight
    xs = m.values
    n = m.n
    # P_n^{-1} is constant, equal to the j-th order statistic, on each
    # interval ((j-1)/n, j/n], so the integral is an exact weighted sum.
    levels = np.arange(n + 1, dtype=float) / n
    wts = np.diff(weight_cdf(w, levels))
    return float(xs @ wts)


def _trimmed_empirical_influence(w: WeightFunction, m: EmpiricalMeasure, x):
    """Exact influence of a trimmed L at an empirical measure.

    Between consecutive order statistics the integrand
    ``l(P_n(y)) (H_x - P_n)(y)`` is constant, so the integral reduces to a
    finite sum over segments, split at ``x`` when it falls inside one.
    """
    xs = m.values
    n = m.n
    if n < 2:
        shape = np.shape(x)
        return 0.0 if shape == () else np.zeros(shape)
    lo = xs[:-1]
    hi = xs[1:]
    lengths = hi - lo
    levels = np.arange(1, n, dtype=float) / n
    weights = np.asarray(w.ell(levels), dtype=float)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    # length of segment j lying at or above x
    above = np.clip(hi[None, :] - np.maximum(lo[None, :], x_arr[:, None]), 0.0, None)
    above = np.minimum(above, lengths[None, :])
    integrand = above - levels[None, :] * lengths[None, :]
    out = -(integrand @ weights)
    return float(out[0]) if np.isscalar(x) else out.reshape(np.shape(x))


@lru_cache(maxsize=64)
def _trimmed_population_constants(w: WeightFunction, p: PopulationSpec):
    """(y_lo, y_hi, total_mass, centering) for a trimmed-L influence.

    ``total_mass = integral of l(P(y)) dy`` and ``centering = integral of
    l(P(y)) P(y) dy`` over the trimmed range; outside it the influence is
    constant: ``centering - total_mass`` below, ``centering`` above.
    """
    y_lo = float(p.quantile(w.alpha))
    y_hi = float(p.quantile(1.0 - w.alpha))
    total = adaptive_simpson(
        lambda y: float(w.ell(p.cdf(y))), y_lo, y_hi, tol=1e-12
    )
    center = adaptive_simpson(
        lambda y: float(w.ell(p.cdf(y)) * p.cdf(y)), y_lo, y_hi, tol=1e-12
    )
    return y_lo, y_hi, total, center


def _trimmed_population_influence(w: WeightFunction, p: PopulationSpec, x, tol=1e-10):
    y_lo, y_hi, total, center = _trimmed_population_constants(w, p)

    def phi_scalar(xv: float) -> float:
        upper = min(max(xv, y_lo), y_hi)
        partial = adaptive_simpson(
            lambda y: float(w.ell(p.cdf(y))), y_lo, upper, tol=tol
        )
        # phi(x) = centering - integral over [x, inf) of l(P(y)) dy
        return center - (total - partial)

    if np.isscalar(x):
        return phi_scalar(float(x))
    flat = np.asarray(x, dtype=float).ravel()
    return np.array([phi_scalar(v) for v in flat]).reshape(np.shape(x))


def influence(f: Functional, m, x):
    """Influence function of ``f`` at measure ``m``, evaluated at ``x``.

    ``m`` may be an :class:`EmpiricalMeasure` or a :class:`PopulationSpec`;
    ``x`` may be a scalar or an array.
    """
    if isinstance(f, SmoothMeanSpec):
        mean = m.mean if isinstance(m, PopulationSpec) else float(m.values.mean())
        gp = float(f.g_prime(mean))
        out = gp * (np.asarray(x, dtype=float) - mean)
        return float(out) if np.isscalar(x) else out
    if isinstance(m, PopulationSpec):
        return _trimmed_population_influence(f.weight, m, x)
    return _trimmed_empirical_influence(f.weight, m, x)


def influence_population_batch(
    f: TrimmedLSpec, p: PopulationSpec, xs: np.ndarray, *, base_grid: int = 512
) -> np.ndarray:
    """Trimmed-L population influence at many points at once.

    Equivalent to per-point quadrature but amortized: the cumulative
    integral of ``l(P(y))`` is built once over the union of the requested
    points and a uniform base grid, with Gauss-Legendre panels.
    """
    y_lo, y_hi, total, center = _trimmed_population_constants(f.weight, p)
    xs = np.asarray(xs, dtype=float)
    interior = np.clip(xs, y_lo, y_hi)
    grid = np.linspace(y_lo, y_hi, base_grid + 1)
    cuts = np.union1d(grid, interior)
    cum = cumulative_gauss(lambda y: np.asarray(f.weight.ell(p.cdf(y))), cuts)
    partial = np.interp(interior, cuts, cum)
    return center - (total - partial)


def _trimmed_sigma2(
    w: WeightFunction,
    p: PopulationSpec,
    *,
    rel_tol: float = 1e-8,
    max_intervals: int = 1 << 14,
) -> float:
    """Asymptotic variance of the trimmed L-statistic.

    Double integral of ``l(P(y)) [P(y) ^ P(z) - P(y) P(z)] l(P(z))`` over
    the trimmed rectangle, evaluated by a tensor-product composite Simpson
    rule.  Sorting y ascending makes ``P(y)^P(z)`` separable through prefix
    sums, so each refinement level costs O(nodes), not O(nodes^2).
    """
    y_lo = float(p.quantile(w.alpha))
    y_hi = float(p.quantile(1.0 - w.alpha))

    def level_value(intervals: int) -> float:
        pad = (y_hi - y_lo) / intervals
        y = np.linspace(y_lo - pad, y_hi + pad, intervals + 1)
        h = y[1] - y[0]
        simpson = np.ones(intervals + 1)
        simpson[1:-1:2] = 4.0
        simpson[2:-1:2] = 2.0
        simpson *= h / 3.0
        pvals = np.asarray(p.cdf(y), dtype=float)
        a = simpson * np.asarray(w.ell(pvals), dtype=float)
        # sum_{j,k} a_j a_k min(p_j, p_k) = sum_j p_j a_j (a_j + 2 S_j)
        # with S_j the suffix sum of a beyond j (p nondecreasing).
        suffix = np.concatenate((np.cumsum(a[::-1])[::-1][1:], [0.0]))
        min_part = float(np.sum(pvals * a * (a + 2.0 * suffix)))
        cross = float(np.sum(a * pvals))
        return min_part - cross * cross

    intervals = 128
    prev = level_value(intervals)
    while intervals < max_intervals:
        intervals *= 2
        cur = level_value(intervals)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise NumericalError(
        "trimmed-L variance quadrature did not converge by "
        f"{max_intervals} intervals per axis; last two estimates "
        f"{prev!r}, {cur!r}"
    )


def sigma2_population(f: Functional, p: PopulationSpec, **kwargs) -> float:
    """Asymptotic variance of ``sqrt(n) (T_n - T(p))``."""
    if isinstance(f, SmoothMeanSpec):
        return float(f.g_prime(p.mean)) ** 2 * p.mu2
    return _trimmed_sigma2(f.weight, p, **kwargs)


def influence_sup_norm(f: TrimmedLSpec, p: PopulationSpec) -> float:
    """Sup norm of the (bounded) trimmed-L influence function.

    Scans a dense grid across the trimmed quantile range, refines around
    the best node by golden-section search, and compares against the two
    constant tail values.
    """
    if not isinstance(f, TrimmedLSpec):
        raise ConfigError("influence_sup_norm requires a trimmed-L functional")
    w = f.weight
    y_lo, y_hi, total, center = _trimmed_population_constants(w, p)
    tail = max(abs(center - total), abs(center))
    lo = float(p.quantile(w.alpha / 2.0))
    hi = float(p.quantile(1.0 - w.alpha / 2.0))
    grid = np.linspace(lo, hi, 4096)
    vals = np.abs(influence_population_batch(f, p, grid))
    best = int(np.argmax(vals))
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, grid.size - 1)]

    def neg_abs_phi(x: float) -> float:
        return -abs(_trimmed_population_influence(w, p, x))

    x_best = _golden_section(neg_abs_phi, a, b)
    refined = abs(_trimmed_population_influence(w, p, x_best))
    return max(float(vals[best]), refined, tail)


def influence_sup_norm_empirical(f: TrimmedLSpec, m: EmpiricalMeasure) -> float:
    """Sup norm of the trimmed-L influence at an empirical measure.

    The influence is nondecreasing in x (its slope is l(P_n) >= 0), so the
    sup is one of the two constant tail values, attained at the extreme
    order statistics.
    """
    if not isinstance(f, TrimmedLSpec):
        raise ConfigError("influence bound requires a trimmed-L functional")
    xs = m.values
    ends = _trimmed_empirical_influence(f.weight, m, np.array([xs[0], xs[-1]]))
    return float(np.max(np.abs(ends)))


def _golden_section(fn, a: float, b: float, tol: float = 1e-8) -> float:
    """Minimize ``fn`` on [a, b]; returns the abscissa."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


# --------------------------------------------------------------------------
# String-key registry (used by config files, the CLI, and the service)


def _smooth(label: str, g, g_prime, g_second) -> SmoothMeanSpec:
    return SmoothMeanSpec(g, g_prime, g_second, holder_order_h=1.0, label=label)


_SMOOTH_BUILTINS = {
    "mean": lambda: _smooth(
        "mean", lambda x: x, lambda x: np.ones_like(np.asarray(x, dtype=float)),
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    ),
    "square_of_mean": lambda: _smooth(
        "square_of_mean", lambda x: np.square(x), lambda x: 2.0 * np.asarray(x),
        lambda x: np.full_like(np.asarray(x, dtype=float), 2.0),
    ),
    "exp_of_mean": lambda: _smooth("exp_of_mean", np.exp, np.exp, np.exp),
}


def functional_from_key(key: str) -> Functional:
    """Resolve a functional name: ``mean``, ``square_of_mean``,
    ``exp_of_mean``, or ``trimmed_l:raised_cosine:alpha=<float>``."""
    key = key.strip()
    if key in _SMOOTH_BUILTINS:
        return _SMOOTH_BUILTINS[key]()
    if key.startswith("trimmed_l:"):
        parts = key.split(":")
        if len(parts) != 3 or not parts[2].startswith("alpha="):
            raise ConfigError(
                f"bad trimmed-L key {key!r}; expected "
                "'trimmed_l:<family>:alpha=<float>'"
            )
        try:
            alpha = float(parts[2][len("alpha="):])
        except ValueError:
            raise ConfigError(f"bad alpha in functional key {key!r}") from None
        return TrimmedLSpec(builtin_weight(parts[1], alpha), label=key)
    raise ConfigError(f"unknown functional key {key!r}")


_POPULATION_PARAMS = {
    "normal": (("mu", "sigma"), normal),
    "uniform": (("a", "b"), uniform),
    "exponential": (("rate",), exponential),
}


def population_from_key(key: str) -> PopulationSpec:
    """Resolve a population name like ``normal:mu=0,sigma=1``,
    ``uniform:a=0,b=1``, or ``exponential:rate=2`` (``lambda`` is accepted
    as an alias for ``rate``)."""
    key = key.strip()
    kind, _, rest = key.partition(":")
    if kind not in _POPULATION_PARAMS:
        raise ConfigError(f"unknown population kind {kind!r}")
    names, factory = _POPULATION_PARAMS[kind]
    given: dict[str, float] = {}
    if rest:
        for item in rest.split(","):
            name, eq, value = item.partition("=")
            name = name.strip()
            if name == "lambda":
                name = "rate"
            if not eq or name not in names:
                raise ConfigError(f"bad population parameter {item!r} in {key!r}")
            try:
                given[name] = float(value)
            except ValueError:
                raise ConfigError(f"bad value in population key {key!r}") from None
    missing = [n for n in names if n not in given]
    if missing:
        raise ConfigError(f"population key {key!r} missing parameters {missing}")
    return factory(*(given[n] for n in names))
