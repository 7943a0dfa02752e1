"""Quadrature helpers shared by the functional and oracle modules."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NumericalError


class QuadratureError(NumericalError):
    """An integration routine failed to reach its requested tolerance."""


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    tol: float = 1e-10,
    max_depth: int = 48,
) -> float:
    """Adaptive Simpson integration of ``f`` over ``[a, b]``.

    Splits intervals until the Richardson estimate of the local error is
    below the (absolute) tolerance allotted to the interval.  Raises
    :class:`QuadratureError` with the achieved tolerance if the depth limit
    is hit anywhere.
    """
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol=tol, max_depth=max_depth)

    def simpson(lo, flo, hi, fhi):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        return mid, fmid, (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    fa, fb = f(a), f(b)
    m0, fm0, whole = simpson(a, fa, b, fb)
    # stack entries: (lo, flo, mid, fmid, hi, fhi, whole, tol, depth)
    stack = [(a, fa, m0, fm0, b, fb, whole, tol, 0)]
    total = 0.0
    worst = 0.0
    failed = False
    while stack:
        lo, flo, mid, fmid, hi, fhi, whole, itol, depth = stack.pop()
        lm, flm, left = simpson(lo, flo, mid, fmid)
        rm, frm, right = simpson(mid, fmid, hi, fhi)
        err = (left + right - whole) / 15.0
        if abs(err) <= itol:
            total += left + right + err
        elif depth >= max_depth:
            total += left + right + err
            worst = max(worst, abs(err))
            failed = True
        else:
            half = 0.5 * itol
            stack.append((lo, flo, lm, flm, mid, fmid, left, half, depth + 1))
            stack.append((mid, fmid, rm, frm, hi, fhi, right, half, depth + 1))
    if failed:
        raise QuadratureError(
            f"adaptive Simpson on [{a}, {b}] failed to converge: requested "
            f"tolerance {tol:g}, achieved {worst:g}"
        )
    return total


def composite_simpson(
    f: Callable[[np.ndarray], np.ndarray], a: float, b: float, intervals: int
) -> float:
    """Composite Simpson rule with ``intervals`` (even) subintervals.

    ``f`` must accept a vector of nodes.
    """
    if intervals % 2:
        raise ValueError("composite Simpson needs an even interval count")
    x = np.linspace(a, b, intervals + 1)
    y = np.asarray(f(x), dtype=float)
    h = (b - a) / intervals
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def refined_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    rel_tol: float = 1e-8,
    abs_tol: float = 0.0,
    start_intervals: int = 64,
    max_intervals: int = 1 << 14,
) -> float:
    """Composite Simpson with interval doubling until two successive
    estimates agree to ``max(abs_tol, rel_tol * |estimate|)``."""
    m = start_intervals
    prev = cur = composite_simpson(f, a, b, m)
    while m < max_intervals:
        m *= 2
        cur = composite_simpson(f, a, b, m)
        if abs(cur - prev) <= max(abs_tol, rel_tol * abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(
        f"composite Simpson refinement on [{a}, {b}] did not converge by "
        f"{max_intervals} intervals; last two estimates {prev!r}, {cur!r}"
    )


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def cumulative_gauss(
    f: Callable[[np.ndarray], np.ndarray], breakpoints: np.ndarray
) -> np.ndarray:
    """Cumulative integrals of ``f`` between consecutive breakpoints.

    Returns ``I`` with ``I[0] = 0`` and ``I[k] = integral of f over
    [breakpoints[0], breakpoints[k]]``, each panel handled by 8-point
    Gauss-Legendre (exact for polynomials up to degree 15; panel widths
    here are small so smooth integrands are resolved to machine level).
    """
    pts = np.asarray(breakpoints, dtype=float)
    lo = pts[:-1]
    hi = pts[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    # nodes: (panels, 8)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    panel = half * (vals * _GL_WEIGHTS[None, :]).sum(axis=1)
    out = np.empty(len(pts))
    out[0] = 0.0
    np.cumsum(panel, out=out[1:])
    return out
