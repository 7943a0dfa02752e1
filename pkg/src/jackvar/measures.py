"""Empirical measures: construction, CDF/quantile evaluation, leave-one-out
views, sup-norm CDF distance, and signed step measures.

All values are immutable after construction and safe to share across
threads.  A leave-one-out measure is a view (shared sorted array plus an
excluded position), so building all ``n`` of them costs O(n), not O(n^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError

__all__ = [
    "Sample",
    "EmpiricalMeasure",
    "SignedStepMeasure",
    "make_empirical",
    "leave_one_out",
    "cdf_at",
    "quantile",
    "ks_distance",
    "signed_difference",
    "load_sample",
]


@dataclass(frozen=True, eq=False)
class Sample:
    """Raw observations in input order."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if arr.size == 0:
            raise ConfigError("empty sample")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("non-finite datum")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Uniform probability measure on the points of a sample.

    ``skip`` marks one position of ``sorted_values`` as excluded, turning
    the instance into a leave-one-out view with mass 1/(n-1) on the
    remaining points.
    """

    sorted_values: np.ndarray
    skip: int | None = None
    # sorted position of each original (unsorted) datum; present when the
    # measure was built from a Sample, needed to resolve leave-one-out by
    # original index.
    original_ranks: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return int(self.sorted_values.size) - (self.skip is not None)

    @cached_property
    def values(self) -> np.ndarray:
        """Materialized nondecreasing support (honoring the skip)."""
        if self.skip is None:
            return self.sorted_values
        return np.delete(self.sorted_values, self.skip)


def make_empirical(data: Sample | np.ndarray | list) -> EmpiricalMeasure:
    """Empirical measure of a sample: mass 1/n at each point, ties stack."""
    if not isinstance(data, Sample):
        data = Sample(np.asarray(data, dtype=float))
    order = np.argsort(data.values, kind="stable")
    ranks = np.empty(data.n, dtype=np.intp)
    ranks[order] = np.arange(data.n)
    sorted_vals = data.values[order]
    sorted_vals.setflags(write=False)
    return EmpiricalMeasure(sorted_vals, None, ranks)


def leave_one_out(em: EmpiricalMeasure, i: int) -> EmpiricalMeasure:
    """Measure on the sample with original datum ``i`` removed."""
    if em.skip is not None:
        raise ConfigError("cannot leave one out of a leave-one-out view")
    if em.n < 2:
        raise ConfigError("cannot leave one out of singleton")
    if em.original_ranks is None:
        raise ConfigError("measure was not built from a sample")
    if not 0 <= i < em.n:
        raise ConfigError(f"index {i} out of range for sample of size {em.n}")
    return EmpiricalMeasure(em.sorted_values, int(em.original_ranks[i]), None)


def cdf_at(em: EmpiricalMeasure, x):
    """Right-continuous step CDF: (# points <= x) / n.  Accepts arrays."""
    count = np.searchsorted(em.sorted_values, x, side="right")
    if em.skip is not None:
        count = count - (em.sorted_values[em.skip] <= np.asarray(x))
    result = count / em.n
    return float(result) if np.isscalar(x) else result


def quantile(em: EmpiricalMeasure, s: float) -> float:
    """Smallest support point whose CDF reaches ``s`` (min-attaining)."""
    if not 0.0 < s <= 1.0:
        raise ConfigError("quantile level out of range")
    k = math.ceil(s * em.n)
    k = min(max(k, 1), em.n)
    # ceil(s * n) picks up rounding dust when s sits exactly at a step of the
    # CDF; re-anchor against the same k/n floats cdf_at produces so that
    # quantile(em, cdf_at(em, x)) <= x holds exactly
    while k > 1 and (k - 1) / em.n >= s:
        k -= 1
    while k < em.n and k / em.n < s:
        k += 1
    pos = k - 1
    if em.skip is not None and pos >= em.skip:
        pos += 1
    return float(em.sorted_values[pos])


def ks_distance(a: EmpiricalMeasure, b: EmpiricalMeasure) -> float:
    """Sup-norm distance between the two step CDFs (exact)."""
    pts = np.union1d(a.values, b.values)
    return float(np.max(np.abs(cdf_at(a, pts) - cdf_at(b, pts))))


@dataclass(frozen=True, eq=False)
class SignedStepMeasure:
    """Bounded signed measure supported on finitely many points."""

    breakpoints: np.ndarray
    masses: np.ndarray

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    @classmethod
    def from_points(cls, points, masses) -> "SignedStepMeasure":
        """Canonicalize: sort, merge equal points by summing their masses,
        drop exact-zero masses."""
        pts = np.asarray(points, dtype=float)
        ms = np.asarray(masses, dtype=float)
        if pts.shape != ms.shape:
            raise ConfigError("points and masses must have equal length")
        order = np.argsort(pts, kind="stable")
        pts, ms = pts[order], ms[order]
        uniq, inverse = np.unique(pts, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, ms)
        keep = merged != 0.0
        return cls(uniq[keep], merged[keep])

    def cdf_at(self, x):
        """Total mass on (-inf, x].  Accepts arrays."""
        csum = np.concatenate(([0.0], np.cumsum(self.masses)))
        idx = np.searchsorted(self.breakpoints, x, side="right")
        result = csum[idx]
        return float(result) if np.isscalar(x) else result


def signed_difference(
    a: EmpiricalMeasure, b: EmpiricalMeasure, scale: float = 1.0
) -> SignedStepMeasure:
    """The signed measure ``scale * (a - b)``."""
    av, bv = a.values, b.values
    pts = np.concatenate([av, bv])
    ms = np.concatenate(
        [np.full(av.size, scale / a.n), np.full(bv.size, -scale / b.n)]
    )
    return SignedStepMeasure.from_points(pts, ms)


def load_sample(path) -> Sample:
    """Read a sample from CSV: one real per line; lines starting with ``#``
    and blank lines are skipped.  Parse errors report the line number."""
    values = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if not text or text.startswith("#"):
                    continue
                try:
                    values.append(float(text))
                except ValueError:
                    raise ConfigError(
                        f"{path}:{lineno}: could not parse {text!r} as a real number"
                    ) from None
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    if not values:
        raise ConfigError(f"{path}: empty sample")
    return Sample(np.asarray(values))
