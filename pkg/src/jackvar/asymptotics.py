"""Asymptotic-variance oracles for the two functional families.

For smooth functions of the mean everything reduces to central moments of
the population.  For trimmed L-functionals the limit of
``sqrt(n) (v_jack - sigma^2)`` is ``Y + Z``, a linear functional of the
Brownian bridge ``B`` with covariance ``Gamma(s,t) = P(s)^P(t) -
P(s)P(t)``:

    Y = integral integral l(P(y)) {B(y^z) - P(y)B(z) - B(y)P(z)} l(P(z))
    Z = 2 integral integral l'(P(y)) B(y) Gamma(y,z) l(P(z))

Discretizing both on a probability-uniform grid gives per-node
coefficients ``c_m`` multiplying ``B(t_m)``, so the variance is the
quadratic form ``c' Gamma c`` -- deterministic, refinable, and
cross-checkable against straight path simulation of ``B``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import TAG_BRIDGE, derive_seed, normals
from .errors import ConfigError, NumericalError
from .functionals import (
    PopulationSpec,
    SmoothMeanSpec,
    TrimmedLSpec,
    WeightFunction,
    influence,
    influence_population_batch,
    sigma2_population,
    _trimmed_population_constants,
)
from .jackknife import PseudovalueSet
from .measures import Sample, ks_distance, make_empirical
from .quadrature import refined_simpson

__all__ = [
    "MomentVector",
    "BridgeGrid",
    "BridgeValue",
    "avar_vjack_smooth_mean",
    "var_phi2_smooth_mean",
    "make_bridge_grid",
    "bridge_variance",
    "refine_bridge_variance",
    "avar_vjack_trimmed_L",
    "path_variance",
    "influence_moments",
    "var_phi2_trimmed_L",
    "pushforward_ks",
    "oracle_bundle",
]

MAX_BRIDGE_NODES = (1 << 12) + 1  # 2^12 intervals


@dataclass(frozen=True)
class MomentVector:
    """First four central moments of a population."""

    mean: float
    mu2: float
    mu3: float
    mu4: float

    def __post_init__(self):
        if not self.mu2 > 0.0:
            raise ConfigError("mu2 must be positive")
        if self.mu4 < self.mu2**2 - 1e-12:
            raise ConfigError("mu4 < mu2^2 violates Cauchy-Schwarz")

    @classmethod
    def from_population(cls, p: PopulationSpec) -> "MomentVector":
        return cls(p.mean, p.mu2, p.mu3, p.mu4)


def avar_vjack_smooth_mean(spec: SmoothMeanSpec, p: PopulationSpec) -> float:
    """Asymptotic variance of ``sqrt(n)(v_jack - sigma^2)``, smooth-mean case.

    Equals (a,b) Gamma (a,b)' with a = g'(mean)^2, b = 2 g'(mean) g''(mean)
    and Gamma the covariance of the joint CLT for the centered second
    moment and the sample mean: Gamma11 = mu4 - mu2^2, Gamma12 = mu3,
    Gamma22 = mu2.
    """
    if spec.g_second is None:
        raise ConfigError("second derivative required")
    m = MomentVector.from_population(p)
    gp = float(spec.g_prime(m.mean))
    gpp = float(spec.g_second(m.mean))
    a = gp * gp
    b = 2.0 * gp * gpp
    return a * a * (m.mu4 - m.mu2**2) + 2.0 * a * b * m.mu3 + b * b * m.mu2


def var_phi2_smooth_mean(spec: SmoothMeanSpec, p: PopulationSpec) -> float:
    """Variance of the squared influence, ``g'(mean)^4 (mu4 - mu2^2)``.

    This is the naive candidate for the asymptotic variance of
    ``sqrt(n)(v_jack - sigma^2)``; it misses the b-term above whenever
    g''(mean) != 0.
    """
    m = MomentVector.from_population(p)
    return float(spec.g_prime(m.mean)) ** 4 * (m.mu4 - m.mu2**2)


# --------------------------------------------------------------------------
# Brownian-bridge quadratic forms


@dataclass(frozen=True)
class BridgeGrid:
    """Discretization of the bridge over the (padded) trimmed range."""

    nodes: np.ndarray
    cdf_values: np.ndarray
    covariance: np.ndarray

    @property
    def m_nodes(self) -> int:
        return self.nodes.size

    def validate(self, tol: float = 1e-8) -> None:
        """Check symmetry/PSD of the covariance (to ``-tol``) and
        monotone cdf values; raises on violation."""
        cov = self.covariance
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise NumericalError("bridge covariance is not symmetric")
        if np.any(np.diff(self.cdf_values) < 0.0):
            raise NumericalError("bridge cdf values are not nondecreasing")
        sym = 0.5 * (cov + cov.T) + tol * np.eye(cov.shape[0])
        try:
            np.linalg.cholesky(sym)
        except np.linalg.LinAlgError:
            low = float(np.linalg.eigvalsh(0.5 * (cov + cov.T))[0])
            raise NumericalError(
                f"bridge covariance has eigenvalue {low:g} < -{tol:g}"
            ) from None


def make_bridge_grid(
    p: PopulationSpec, w: WeightFunction, m_nodes: int
) -> BridgeGrid:
    """Probability-uniform grid spanning quantile levels
    ``[alpha/2, 1 - alpha/2]`` (the weight support padded by ``alpha/2``
    per side), with the exact bridge covariance at the nodes."""
    if m_nodes < 16:
        raise ConfigError("m_nodes must be at least 16")
    alpha = w.alpha
    levels = alpha / 2.0 + (1.0 - alpha) * np.arange(m_nodes) / (m_nodes - 1)
    nodes = np.asarray(p.quantile(levels), dtype=float)
    # P(node_m) = level_m by construction; using the levels keeps the
    # covariance exact instead of round-tripping through cdf(quantile(.)).
    cov = np.minimum.outer(levels, levels) - np.outer(levels, levels)
    return BridgeGrid(nodes=nodes, cdf_values=levels, covariance=cov)


def _bridge_coefficients(
    grid: BridgeGrid, w: WeightFunction, include_z: bool
) -> np.ndarray:
    """Per-node coefficients c with Y (+ Z) = sum_m c_m B(t_m).

    Trapezoid weights in y; the B(y^z) term routes each (j, k) pair's
    weight to the min node, which for sorted nodes is a suffix sum.
    """
    t = grid.nodes
    u = grid.cdf_values
    wt = np.empty_like(t)
    wt[0] = 0.5 * (t[1] - t[0])
    wt[-1] = 0.5 * (t[-1] - t[-2])
    wt[1:-1] = 0.5 * (t[2:] - t[:-2])
    a = np.asarray(w.ell(u), dtype=float) * wt
    suffix = np.concatenate((np.cumsum(a[::-1])[::-1][1:], [0.0]))
    c = a * a + 2.0 * a * suffix - 2.0 * a * float(a @ u)
    if include_z:
        d = np.asarray(w.ell_prime(u), dtype=float) * wt
        c = c + 2.0 * d * (grid.covariance @ a)
    return c


def bridge_variance(
    grid: BridgeGrid, w: WeightFunction, *, include_z: bool = True
) -> float:
    """Variance of the discretized Y (+ Z) on one fixed grid."""
    c = _bridge_coefficients(grid, w, include_z)
    return float(c @ grid.covariance @ c)


@dataclass(frozen=True)
class BridgeValue:
    """A refined bridge variance with its refinement trace."""

    value: float
    m_nodes: int
    history: tuple[tuple[int, float], ...]


def refine_bridge_variance(
    p: PopulationSpec,
    w: WeightFunction,
    *,
    include_z: bool = True,
    rel_tol: float = 1e-4,
    start_nodes: int = 65,
    max_nodes: int = MAX_BRIDGE_NODES,
) -> BridgeValue:
    """Refine the grid (M -> 2M-1) until two successive variances agree
    to ``rel_tol`` relative."""
    m = max(int(start_nodes), 16)
    value = bridge_variance(make_bridge_grid(p, w, m), w, include_z=include_z)
    history = [(m, value)]
    while m < max_nodes:
        m = 2 * (m - 1) + 1
        cur = bridge_variance(make_bridge_grid(p, w, m), w, include_z=include_z)
        history.append((m, cur))
        if abs(cur - value) <= rel_tol * max(abs(cur), 1e-300):
            return BridgeValue(cur, m, tuple(history))
        value = cur
    raise NumericalError(
        f"bridge variance did not converge by {max_nodes} nodes; "
        f"last two values {history[-2][1]!r}, {history[-1][1]!r}"
    )


def avar_vjack_trimmed_L(
    p: PopulationSpec,
    w: WeightFunction,
    grid: BridgeGrid | None = None,
    *,
    rel_tol: float = 1e-4,
    max_nodes: int = MAX_BRIDGE_NODES,
) -> float:
    """Asymptotic variance Var(Y + Z) of ``sqrt(n)(v_jack - sigma^2)``
    for a trimmed L-functional; ``grid``, if given, sets the starting
    resolution for refinement."""
    start = grid.m_nodes if grid is not None else 65
    return refine_bridge_variance(
        p, w, include_z=True, rel_tol=rel_tol,
        start_nodes=start, max_nodes=max_nodes,
    ).value


def path_variance(
    p: PopulationSpec,
    w: WeightFunction,
    *,
    seed: int,
    m_nodes: int = 513,
    n_paths: int = 100_000,
    include_z: bool = True,
    chunk: int = 8192,
) -> float:
    """Monte Carlo oracle for the bridge variance.

    Simulates discretized bridge paths B = L N(0, I) with L a symmetric
    square root of the grid covariance and evaluates Y (+ Z) per path by
    the same quadrature coefficients; returns the sample variance.  Path
    ``j`` consumes normal variates ``[j*M, (j+1)*M)`` of the derived
    stream, so the result does not depend on ``chunk``.
    """
    grid = make_bridge_grid(p, w, m_nodes)
    c = _bridge_coefficients(grid, w, include_z)
    eigval, eigvec = np.linalg.eigh(grid.covariance)
    root = eigvec * np.sqrt(np.clip(eigval, 0.0, None))
    # per-path value c.(L z) == (L'c).z -- fold the projection once
    proj = root.T @ c
    stream = derive_seed(seed, TAG_BRIDGE, m_nodes, int(include_z))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_paths:
        count = min(chunk, n_paths - done)
        z = normals(stream, count * m_nodes, start=done * m_nodes)
        vals = z.reshape(count, m_nodes) @ proj
        total += float(vals.sum())
        total_sq += float(vals @ vals)
        done += count
    return (total_sq - total * total / n_paths) / (n_paths - 1)


# --------------------------------------------------------------------------
# Influence moments by direct quadrature


def influence_moments(
    f: TrimmedLSpec,
    p: PopulationSpec,
    orders: tuple[int, ...] = (2, 4),
    *,
    abs_tol: float = 1e-8,
) -> dict[int, float]:
    """``E phi_p^k`` for each requested order ``k``.

    Quadrature of ``phi^k`` against the density over the weight support
    ``[P^{-1}(alpha), P^{-1}(1-alpha)]``, plus the two constant tails
    (influence is constant outside the support, each tail carrying mass
    ``alpha``).
    """
    w = f.weight
    y_lo, y_hi, total, center = _trimmed_population_constants(w, p)
    phi_lo = center - total
    phi_hi = center
    out: dict[int, float] = {}
    for k in orders:
        def integrand(xs, _k=k):
            return influence_population_batch(f, p, xs) ** _k * p.pdf(xs)

        body = refined_simpson(
            integrand, y_lo, y_hi,
            rel_tol=0.0, abs_tol=abs_tol, start_intervals=128,
        )
        out[k] = float(body + w.alpha * (phi_lo**k + phi_hi**k))
    return out


def var_phi2_trimmed_L(
    f: TrimmedLSpec, p: PopulationSpec, *, abs_tol: float = 1e-8
) -> float:
    """``Var phi_p^2 = E phi_p^4 - (E phi_p^2)^2`` by direct quadrature.

    Equals Var Y alone; it understates Var(Y + Z) whenever the Z term is
    active, which is the point of the corrected oracle above.
    """
    mom = influence_moments(f, p, (2, 4), abs_tol=abs_tol)
    return mom[4] - mom[2] ** 2


# --------------------------------------------------------------------------
# Pushforward diagnostic


def pushforward_ks(
    ps: PseudovalueSet,
    f,
    p: PopulationSpec,
    data: Sample,
) -> float:
    """KS distance between the empirical law of the modified pseudovalues
    and the empirical law of the population influence at the same data.

    Finite-sample proxy for a.s. weak convergence of the pseudovalue
    empirical measure to the pushforward of p under phi_p.
    """
    if isinstance(f, TrimmedLSpec):
        phi_vals = influence_population_batch(f, p, data.values)
    else:
        phi_vals = influence(f, p, data.values)
    return ks_distance(
        make_empirical(np.asarray(ps.q_prime, dtype=float)),
        make_empirical(np.asarray(phi_vals, dtype=float)),
    )


# --------------------------------------------------------------------------
# Everything an `oracle` request needs, in one bundle


def oracle_bundle(f, p: PopulationSpec) -> dict:
    """sigma^2, corrected avar, naive Var phi^2, plus method metadata."""
    if isinstance(f, SmoothMeanSpec):
        return {
            "sigma2": float(sigma2_population(f, p)),
            "avar_vjack": float(avar_vjack_smooth_mean(f, p)),
            "var_phi2": float(var_phi2_smooth_mean(f, p)),
            "method": {"family": "smooth_mean", "moments": "closed_form"},
        }
    if not isinstance(f, TrimmedLSpec):
        raise ConfigError(f"unsupported functional {f!r}")
    refined = refine_bridge_variance(p, f.weight, include_z=True)
    return {
        "sigma2": float(sigma2_population(f, p)),
        "avar_vjack": float(refined.value),
        "var_phi2": float(var_phi2_trimmed_L(f, p)),
        "method": {
            "family": "trimmed_l",
            "bridge_nodes": refined.m_nodes,
            "bridge_rel_tol": 1e-4,
            "quadrature_abs_tol": 1e-8,
        },
    }
