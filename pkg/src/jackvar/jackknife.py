"""Jackknife pseudovalues and variance estimators.

Pseudovalues come in two equivalent forms: ``Q_i = n T_n - (n-1) T_{-i}``
and the modified ``Q'_i = (n-1)(T_n - T_{-i})``.  They differ by the
constant ``T_n``, so deviations from their means, and hence the jackknife
variance, are identical.  Everything here is indexed by the original data
order so pseudovalue ``i`` pairs with datum ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import ConfigError
from .functionals import (
    Functional,
    SmoothMeanSpec,
    TrimmedLSpec,
    eval_functional,
    weight_cdf,
)
from .measures import Sample, leave_one_out, make_empirical

__all__ = [
    "PseudovalueSet",
    "VarianceEstimates",
    "pseudovalues",
    "v_jack",
    "infinitesimal_jackknife",
    "ij_trimmed_double_sum",
    "tau2",
    "pseudovalue_bootstrap",
    "estimate_variances",
]


@dataclass(frozen=True, eq=False)
class PseudovalueSet:
    """Per-observation jackknife pseudovalues, original data order."""

    q: np.ndarray
    q_prime: np.ndarray
    t_full: float

    @property
    def n(self) -> int:
        return int(self.q_prime.size)


@dataclass(frozen=True)
class VarianceEstimates:
    """Jackknife and infinitesimal-jackknife estimates of the asymptotic
    variance of ``sqrt(n) (T_n - T(p))``."""

    v_jack: float
    ij: float
    n: int

    def __post_init__(self):
        if self.v_jack < 0.0 or self.ij < 0.0:
            raise ConfigError("variance estimates must be nonnegative")


def _coerce(data) -> Sample:
    return data if isinstance(data, Sample) else Sample(np.asarray(data, dtype=float))


def _apply(fn, arr: np.ndarray) -> np.ndarray:
    """Apply ``fn`` elementwise, tolerating scalar-only callables."""
    out = np.asarray(fn(arr), dtype=float)
    if out.shape != arr.shape:
        out = np.array([float(fn(v)) for v in arr])
    return out


def _loo_values_smooth(f: SmoothMeanSpec, xs: np.ndarray) -> tuple[float, np.ndarray]:
    n = xs.size
    total = float(xs.sum())
    t_full = float(f.g(total / n))
    loo_means = (total - xs) / (n - 1)
    return t_full, _apply(f.g, loo_means)


def _loo_values_trimmed(f: TrimmedLSpec, xs: np.ndarray) -> tuple[float, np.ndarray]:
    """Leave-one-out trimmed-L values in one pass over the sorted sample.

    Dropping the rank-r order statistic reweights the remaining ones with
    the (n-1)-point increments of W, which splits into a prefix (ranks
    below r keep their position) and a suffix (ranks above shift down by
    one).  Both are cumulative sums.
    """
    n = xs.size
    order = np.argsort(xs, kind="stable")
    sx = xs[order]

    levels_full = np.arange(n + 1, dtype=float) / n
    t_full = float(sx @ np.diff(weight_cdf(f.weight, levels_full)))

    levels_loo = np.arange(n, dtype=float) / (n - 1)
    dw = np.diff(weight_cdf(f.weight, levels_loo))  # length n-1
    prefix = np.concatenate(([0.0], np.cumsum(sx[: n - 1] * dw)))
    shifted = sx[1:] * dw  # rank k+1 value with rank-k weight
    suffix = np.concatenate((np.cumsum(shifted[::-1])[::-1], [0.0]))
    by_rank = prefix + suffix  # dropped rank r (0-based): prefix[r] + suffix[r]

    t_loo = np.empty(n)
    t_loo[order] = by_rank
    return t_full, t_loo


def pseudovalues(f: Functional, data, *, method: str = "fast") -> PseudovalueSet:
    """Jackknife pseudovalues of ``f`` on ``data``.

    ``method='fast'`` uses the closed-form leave-one-out updates (O(n) for
    functions of the mean, O(n log n) for trimmed L); ``method='generic'``
    re-evaluates the functional on every leave-one-out measure and exists
    as the slow reference path.
    """
    sample = _coerce(data)
    xs = sample.values
    n = sample.n
    if n < 2:
        raise ConfigError("pseudovalues require a sample of size at least 2")
    if method == "generic":
        em = make_empirical(sample)
        t_full = eval_functional(f, em)
        t_loo = np.array(
            [eval_functional(f, leave_one_out(em, i)) for i in range(n)]
        )
    elif method == "fast":
        if isinstance(f, SmoothMeanSpec):
            t_full, t_loo = _loo_values_smooth(f, xs)
        else:
            t_full, t_loo = _loo_values_trimmed(f, xs)
    else:
        raise ConfigError(f"unknown pseudovalue method {method!r}")
    q_prime = (n - 1) * (t_full - t_loo)
    return PseudovalueSet(q=q_prime + t_full, q_prime=q_prime, t_full=t_full)


def v_jack(ps: PseudovalueSet) -> float:
    """Jackknife variance estimate: sample variance (1/(n-1)) of the
    pseudovalues, computed two-pass from the modified form."""
    dev = ps.q_prime - ps.q_prime.mean()
    return float(dev @ dev) / (ps.n - 1)


def infinitesimal_jackknife(f: Functional, data) -> float:
    """Plug-in variance estimate ``(1/n) sum_i phi(x_i)^2`` with the
    influence function taken at the empirical measure itself."""
    sample = _coerce(data)
    xs = sample.values
    n = sample.n
    if isinstance(f, SmoothMeanSpec):
        mean = float(xs.mean())
        phi = float(f.g_prime(mean)) * (xs - mean)
        return float(phi @ phi) / n
    if n < 2:
        return 0.0
    sx = np.sort(xs)
    w = f.weight
    levels = np.arange(1, n, dtype=float) / n
    weights = np.asarray(w.ell(levels), dtype=float)
    lengths = np.diff(sx)
    seg = weights * lengths
    const = float(seg @ levels)
    # phi at the rank-r order statistic: segments at or above it contribute
    # in full, all others not at all.
    suffix = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
    phi_sorted = const - suffix
    return float(phi_sorted @ phi_sorted) / n


def ij_trimmed_double_sum(f: TrimmedLSpec, data) -> float:
    """The infinitesimal jackknife for a trimmed L as the exact double sum
    over the empirical CDF's plateau rectangle (equivalent to the
    per-point form; exposed for cross-checking)."""
    sample = _coerce(data)
    n = sample.n
    if n < 2:
        return 0.0
    sx = np.sort(sample.values)
    levels = np.arange(1, n, dtype=float) / n
    b = np.asarray(f.weight.ell(levels), dtype=float) * np.diff(sx)
    suffix = np.concatenate((np.cumsum(b[::-1])[::-1][1:], [0.0]))
    min_part = float(np.sum(levels * b * (b + 2.0 * suffix)))
    cross = float(b @ levels)
    return min_part - cross * cross


def tau2(ps: PseudovalueSet, bound: float) -> float:
    """Plug-in variance of the truncated squares of the pseudovalues.

    ``bound`` caps the squares (pass the squared influence sup norm, or
    ``inf`` to disable truncation).
    """
    if bound < 0.0:
        raise ConfigError("truncation bound must be nonnegative")
    sq = np.minimum(np.square(ps.q_prime), bound)
    return float(np.var(sq))


def pseudovalue_bootstrap(
    ps: PseudovalueSet, bound: float, seed: int, b_reps: int
) -> np.ndarray:
    """Bootstrap the pseudovalues as if they were an iid sample.

    Each round resamples ``n`` pseudovalues with replacement and returns
    ``n^{-1/2} sum_i (sq(Q*_i) - sq(Q'_i))``.  Round ``r`` draws from the
    child stream ``derive_seed(seed, TAG_BOOTSTRAP, r)``, so results do not
    depend on execution order and round ``r`` is stable under changes of
    ``b_reps``.
    """
    if b_reps < 1:
        raise ConfigError("bootstrap needs at least one round")
    n = ps.n
    sq = np.minimum(np.square(ps.q_prime), bound)
    base = float(sq.sum())
    root_n = np.sqrt(n)
    out = np.empty(b_reps)
    chunk = max(1, min(b_reps, (1 << 22) // n))
    for start in range(0, b_reps, chunk):
        rounds = range(start, min(start + chunk, b_reps))
        idx = np.stack(
            [
                _rng.indices(_rng.derive_seed(seed, _rng.TAG_BOOTSTRAP, r), n, n)
                for r in rounds
            ]
        )
        out[start : start + idx.shape[0]] = (sq[idx].sum(axis=1) - base) / root_n
    return out


def estimate_variances(f: Functional, data) -> VarianceEstimates:
    """Convenience wrapper: both variance estimates for one sample."""
    sample = _coerce(data)
    ps = pseudovalues(f, sample)
    return VarianceEstimates(
        v_jack=v_jack(ps),
        ij=infinitesimal_jackknife(f, sample),
        n=sample.n,
    )
