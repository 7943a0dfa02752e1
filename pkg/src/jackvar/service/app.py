"""FastAPI front end over the estimation, oracle, and experiment engines.

Domain errors map to HTTP statuses the CLI understands: ConfigError/422
mean bad input (client exit 2), NumericalError means a failed numerical
procedure (500, client exit 3).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..asymptotics import oracle_bundle
from ..errors import ConfigError, NumericalError
from ..functionals import (
    TrimmedLSpec,
    functional_from_key,
    influence_sup_norm_empirical,
    population_from_key,
)
from ..jackknife import (
    infinitesimal_jackknife,
    pseudovalue_bootstrap,
    pseudovalues,
    tau2,
    v_jack,
)
from ..measures import Sample, make_empirical
from ..montecarlo import convergence_sweep, run_experiment
from .schemas import (
    EstimateRequest,
    EstimateResponse,
    ExperimentRequest,
    ExperimentResponse,
    OracleRequest,
    OracleResponse,
    SweepResponse,
)


def _resolve_bound(requested, f, data: Sample) -> float:
    if requested == "inf":
        return float("inf")
    if requested == "auto":
        if not isinstance(f, TrimmedLSpec):
            raise ConfigError(
                "bound 'auto' requires a trimmed-L functional; the "
                "smooth-mean influence is unbounded"
            )
        return influence_sup_norm_empirical(f, make_empirical(data)) ** 2
    bound = float(requested)
    if not bound >= 0.0:
        raise ConfigError("truncation bound must be nonnegative")
    return bound


def create_app() -> FastAPI:
    app = FastAPI(title="jackvar", version=__version__)

    @app.exception_handler(ConfigError)
    async def config_error(request: Request, exc: ConfigError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(NumericalError)
    async def numerical_error(request: Request, exc: NumericalError) -> JSONResponse:
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/estimate", response_model=EstimateResponse)
    def estimate(req: EstimateRequest) -> EstimateResponse:
        f = functional_from_key(req.functional)
        data = Sample(np.asarray(req.values, dtype=float))
        ps = pseudovalues(f, data)
        out = {
            "n": data.n,
            "t_full": float(ps.t_full),
            "v_jack": v_jack(ps),
            "ij": infinitesimal_jackknife(f, data),
        }
        if req.tau2 or req.bootstrap_reps:
            bound = _resolve_bound(req.bound, f, data)
            out["bound"] = None if np.isinf(bound) else bound
            if req.tau2:
                out["tau2"] = tau2(ps, bound)
            if req.bootstrap_reps:
                stats = pseudovalue_bootstrap(ps, bound, req.seed, req.bootstrap_reps)
                out["bootstrap_variance"] = float(np.var(stats, ddof=1))
        return EstimateResponse(**out)

    @app.post("/oracle", response_model=OracleResponse)
    def oracle(req: OracleRequest) -> OracleResponse:
        f = functional_from_key(req.functional)
        p = population_from_key(req.population)
        return OracleResponse(
            functional=req.functional, population=req.population, **oracle_bundle(f, p)
        )

    @app.post("/experiment", response_model=ExperimentResponse)
    def experiment(req: ExperimentRequest) -> ExperimentResponse:
        report = run_experiment(req.to_config()).as_dict()
        return ExperimentResponse(**report)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: ExperimentRequest) -> SweepResponse:
        return SweepResponse(**convergence_sweep(req.to_config()))

    return app
