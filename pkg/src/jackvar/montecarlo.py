"""Seeded sampling and the Monte Carlo replication engine.

The engine measures, across seeds and sample sizes, the empirical
variances of the sqrt(n)-scaled fluctuations

    sqrt(n) (v_jack - sigma^2),  sqrt(n) (IJ - sigma^2),  sqrt(n) (v_jack - IJ)

against the analytic oracles.  Determinism is a hard contract: replicate
``(n, r)`` always draws from the child stream ``derive_seed(master_seed,
TAG_SAMPLE, n, r)``, whatever the scheduling, and aggregation runs in
fixed (n, r) order, so identical configs produce identical reports
(excluding the wall-clock field) at any thread count.
"""

from __future__ import annotations

import dataclasses
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from ._rng import TAG_BOOTSTRAP, TAG_SAMPLE, derive_seed, normals, uniforms
from .asymptotics import oracle_bundle, pushforward_ks
from .errors import ConfigError
from .functionals import (
    PopulationSpec,
    TrimmedLSpec,
    functional_from_key,
    influence_sup_norm,
    population_from_key,
)
from .jackknife import (
    infinitesimal_jackknife,
    pseudovalue_bootstrap,
    pseudovalues,
    tau2,
    v_jack,
)
from .measures import Sample
from .reports import SCHEMA_VERSION

__all__ = [
    "ALL_ESTIMATORS",
    "ExperimentConfig",
    "ExperimentReport",
    "sample",
    "worker_count",
    "ks_to_normal",
    "run_experiment",
    "convergence_sweep",
]

ALL_ESTIMATORS = ("v_jack", "ij", "tau2", "bootstrap", "pushforward_ks")
_REQUIRED_KEYS = ("functional", "population", "n_values", "replications", "master_seed")


def _as_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(f"{what} must be an integer")
    return int(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one Monte Carlo run."""

    functional: str
    population: str
    n_values: tuple[int, ...]
    replications: int
    master_seed: int
    estimators: tuple[str, ...] = ("v_jack", "ij")
    bootstrap_reps: int = 1000

    def __post_init__(self):
        object.__setattr__(
            self,
            "n_values",
            tuple(_as_int(n, "each entry of n_values") for n in self.n_values),
        )
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if _as_int(self.replications, "replications") < 2:
            raise ConfigError("replications must be at least 2")
        if not self.n_values:
            raise ConfigError("n_values must be nonempty")
        if any(n < 2 for n in self.n_values):
            raise ConfigError("every n must be at least 2")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ConfigError("n_values must be strictly increasing")
        if not 0 <= _as_int(self.master_seed, "master_seed") < 1 << 64:
            raise ConfigError("master_seed must fit in 64 unsigned bits")
        unknown = sorted(set(self.estimators) - set(ALL_ESTIMATORS))
        if unknown:
            raise ConfigError(f"unknown estimators {unknown}")
        if _as_int(self.bootstrap_reps, "bootstrap_reps") < 1:
            raise ConfigError("bootstrap_reps must be at least 1")

    @classmethod
    def from_mapping(cls, data) -> "ExperimentConfig":
        """Build from a parsed TOML/JSON mapping, rejecting unknown keys."""
        if not isinstance(data, dict):
            raise ConfigError("experiment config must be a table of key/value pairs")
        field_names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - field_names)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        missing = [k for k in _REQUIRED_KEYS if k not in data]
        if missing:
            raise ConfigError(f"config missing required keys {missing}")
        kwargs = dict(data)
        for key in ("functional", "population"):
            if not isinstance(kwargs[key], str):
                raise ConfigError(f"{key} must be a string")
        for key in ("n_values", "estimators"):
            if key in kwargs:
                if not isinstance(kwargs[key], (list, tuple)):
                    raise ConfigError(f"{key} must be a list")
                kwargs[key] = tuple(kwargs[key])
        if "estimators" in kwargs and not all(
            isinstance(e, str) for e in kwargs["estimators"]
        ):
            raise ConfigError("estimators must be a list of strings")
        return cls(**kwargs)

    def as_dict(self) -> dict:
        return {
            "functional": self.functional,
            "population": self.population,
            "n_values": list(self.n_values),
            "replications": self.replications,
            "master_seed": self.master_seed,
            "estimators": list(self.estimators),
            "bootstrap_reps": self.bootstrap_reps,
        }


@dataclass
class ExperimentReport:
    """Results of one run: config echo, oracles, per-n summaries."""

    config: ExperimentConfig
    oracle: dict
    results: list
    elapsed_seconds: float

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "experiment",
            "config": self.config.as_dict(),
            "oracle": self.oracle,
            "results": self.results,
            "elapsed_seconds": self.elapsed_seconds,
        }


def sample(p: PopulationSpec, n: int, seed: int) -> Sample:
    """``n`` iid draws from ``p`` out of the stream of ``seed``.

    Normal draws use Box-Muller on consecutive uniform pairs (pinned for
    cross-implementation reproducibility), uniform draws scale the stream
    directly, exponential draws invert the CDF: ``-log(1 - u) / rate``.
    """
    if n < 1:
        raise ConfigError("sample size must be at least 1")
    if p.kind == "normal":
        mu, sigma = p.params
        return Sample(mu + sigma * normals(seed, n))
    if p.kind == "uniform":
        a, b = p.params
        return Sample(a + (b - a) * uniforms(seed, n))
    rate, = p.params
    return Sample(-np.log1p(-uniforms(seed, n)) / rate)


def worker_count() -> int:
    """Worker cap from JACKVAR_THREADS (default: machine parallelism)."""
    raw = os.environ.get("JACKVAR_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"JACKVAR_THREADS must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError("JACKVAR_THREADS must be at least 1")
    return cap


def ks_to_normal(values) -> float:
    """KS distance between the standardized empirical law of ``values``
    and the standard normal (location/scale fitted, so a diagnostic, not
    a test statistic)."""
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    sd = float(v.std(ddof=1))
    if not sd > 0.0:
        return 0.5
    cdf = ndtr((v - v.mean()) / sd)
    i = np.arange(1, n + 1, dtype=float)
    return float(max(np.max(cdf - (i - 1.0) / n), np.max(i / n - cdf)))


def _variance_summary(values: np.ndarray) -> dict:
    """Sample variance with a standard error from replicate fourth
    moments: Var(s^2) ~ (m4 - m2^2 (R-3)/(R-1)) / R."""
    r = values.size
    dev = values - values.mean()
    m2 = float(dev @ dev) / r
    m4 = float(np.mean(dev**4))
    se2 = (m4 - m2 * m2 * (r - 3.0) / (r - 1.0)) / r
    return {
        "mean": float(values.mean()),
        "variance": float(values.var(ddof=1)),
        "variance_se": float(np.sqrt(max(se2, 0.0))),
    }


def _replicate_row(f, p, n: int, r: int, cfg: ExperimentConfig, bound: float) -> dict:
    data = sample(p, n, derive_seed(cfg.master_seed, TAG_SAMPLE, n, r))
    ps = pseudovalues(f, data)
    row = {"vjack": v_jack(ps), "ij": infinitesimal_jackknife(f, data)}
    if "tau2" in cfg.estimators:
        row["tau2"] = tau2(ps, bound)
    if "bootstrap" in cfg.estimators:
        stats = pseudovalue_bootstrap(
            ps, bound, derive_seed(cfg.master_seed, TAG_BOOTSTRAP, n, r),
            cfg.bootstrap_reps,
        )
        row["bootstrap_variance"] = float(np.var(stats, ddof=1))
    if "pushforward_ks" in cfg.estimators:
        row["pushforward_ks"] = pushforward_ks(ps, f, p, data)
    return row


def _summarize(n: int, rows: list, sigma2: float) -> dict:
    root_n = float(np.sqrt(n))
    vj = np.array([row["vjack"] for row in rows])
    ij = np.array([row["ij"] for row in rows])
    scaled_vj = root_n * (vj - sigma2)
    scaled_ij = root_n * (ij - sigma2)
    scaled_diff = root_n * (vj - ij)
    sq_diff = scaled_diff**2
    entry = {
        "n": n,
        "replications": len(rows),
        "scaled": {
            "vjack_minus_sigma2": _variance_summary(scaled_vj),
            "ij_minus_sigma2": _variance_summary(scaled_ij),
            "vjack_minus_ij": {
                **_variance_summary(scaled_diff),
                "mean_square": float(sq_diff.mean()),
                "mean_square_se": float(sq_diff.std(ddof=1) / np.sqrt(sq_diff.size)),
            },
        },
        "ks_normal_vjack": ks_to_normal(scaled_vj),
        "replicates": {
            "vjack": [float(v) for v in vj],
            "ij": [float(v) for v in ij],
            "scaled_diff": [float(v) for v in scaled_diff],
        },
    }
    for key in ("tau2", "bootstrap_variance", "pushforward_ks"):
        if key in rows[0]:
            vals = np.array([row[key] for row in rows])
            entry[key] = {
                "mean": float(vals.mean()),
                "median": float(np.median(vals)),
                "values": [float(v) for v in vals],
            }
    return entry


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run all replications of ``cfg`` and summarize per sample size."""
    start = time.perf_counter()
    f = functional_from_key(cfg.functional)
    p = population_from_key(cfg.population)
    oracle = oracle_bundle(f, p)
    sigma2 = oracle["sigma2"]
    bound = float("inf")
    if isinstance(f, TrimmedLSpec) and {"tau2", "bootstrap"} & set(cfg.estimators):
        bound = influence_sup_norm(f, p) ** 2
    workers = worker_count()
    results = []
    for n in cfg.n_values:
        def one(r: int, n=n) -> dict:
            return _replicate_row(f, p, n, r, cfg, bound)

        if workers == 1:
            rows = [one(r) for r in range(cfg.replications)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(one, range(cfg.replications)))
        results.append(_summarize(n, rows, sigma2))
    return ExperimentReport(
        config=cfg,
        oracle=oracle,
        results=results,
        elapsed_seconds=time.perf_counter() - start,
    )


def convergence_sweep(cfg: ExperimentConfig) -> dict:
    """Empirical variance vs. oracle across the n sweep, plus the decay
    diagnostic for the equivalence statistic sqrt(n)(v_jack - IJ)."""
    if len(cfg.n_values) < 2:
        raise ConfigError("a sweep needs at least two sample sizes")
    report = run_experiment(cfg)
    avar = report.oracle["avar_vjack"]
    rows = []
    mean_squares = []
    for entry in report.results:
        for stat in ("vjack_minus_sigma2", "ij_minus_sigma2"):
            emp = entry["scaled"][stat]["variance"]
            rows.append(
                {
                    "n": entry["n"],
                    "statistic": stat,
                    "empirical_variance": emp,
                    "oracle": avar,
                    "ratio": emp / avar if avar else None,
                }
            )
        mean_squares.append(
            {
                "n": entry["n"],
                "mean_square": entry["scaled"]["vjack_minus_ij"]["mean_square"],
            }
        )
    ms = [row["mean_square"] for row in mean_squares]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "sweep",
        "config": cfg.as_dict(),
        "oracle": report.oracle,
        "rows": rows,
        "mean_square_scaled_diff": mean_squares,
        "mean_square_nonincreasing": all(b <= a for a, b in zip(ms, ms[1:])),
        "elapsed_seconds": report.elapsed_seconds,
    }
