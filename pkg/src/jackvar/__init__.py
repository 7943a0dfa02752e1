"""Jackknife and infinitesimal-jackknife variance estimation for plug-in
functionals (smooth functions of the mean, smooth trimmed L-statistics),
with analytic asymptotic-variance oracles and a deterministic Monte
Carlo harness.

The HTTP service lives in ``jackvar.service`` and the command-line
client in ``jackvar.cli``.
"""

__version__ = "0.1.0"

from .asymptotics import (
    BridgeGrid,
    BridgeValue,
    MomentVector,
    avar_vjack_smooth_mean,
    avar_vjack_trimmed_L,
    bridge_variance,
    influence_moments,
    make_bridge_grid,
    oracle_bundle,
    path_variance,
    pushforward_ks,
    refine_bridge_variance,
    var_phi2_smooth_mean,
    var_phi2_trimmed_L,
)
from .errors import ConfigError, JackvarError, NumericalError
from .functionals import (
    PopulationSpec,
    SmoothMeanSpec,
    TrimmedLSpec,
    WeightFunction,
    builtin_weight,
    eval_functional,
    exponential,
    functional_from_key,
    influence,
    influence_sup_norm,
    influence_sup_norm_empirical,
    normal,
    population_from_key,
    sigma2_population,
    uniform,
    weight_cdf,
)
from .jackknife import (
    PseudovalueSet,
    VarianceEstimates,
    estimate_variances,
    infinitesimal_jackknife,
    pseudovalue_bootstrap,
    pseudovalues,
    tau2,
    v_jack,
)
from .measures import (
    EmpiricalMeasure,
    Sample,
    cdf_at,
    ks_distance,
    leave_one_out,
    load_sample,
    make_empirical,
    quantile,
)
from .montecarlo import (
    ExperimentConfig,
    ExperimentReport,
    convergence_sweep,
    ks_to_normal,
    run_experiment,
    sample,
)
from .reports import SCHEMA_VERSION, canonical_json, load_schema, validate_report

__all__ = [
    "__version__",
    "SCHEMA_VERSION",
    "JackvarError",
    "ConfigError",
    "NumericalError",
    "Sample",
    "EmpiricalMeasure",
    "make_empirical",
    "leave_one_out",
    "cdf_at",
    "quantile",
    "ks_distance",
    "load_sample",
    "SmoothMeanSpec",
    "WeightFunction",
    "TrimmedLSpec",
    "PopulationSpec",
    "normal",
    "uniform",
    "exponential",
    "builtin_weight",
    "weight_cdf",
    "eval_functional",
    "influence",
    "sigma2_population",
    "influence_sup_norm",
    "influence_sup_norm_empirical",
    "functional_from_key",
    "population_from_key",
    "PseudovalueSet",
    "VarianceEstimates",
    "pseudovalues",
    "v_jack",
    "infinitesimal_jackknife",
    "tau2",
    "pseudovalue_bootstrap",
    "estimate_variances",
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
    "ExperimentConfig",
    "ExperimentReport",
    "sample",
    "ks_to_normal",
    "run_experiment",
    "convergence_sweep",
    "canonical_json",
    "load_schema",
    "validate_report",
]
