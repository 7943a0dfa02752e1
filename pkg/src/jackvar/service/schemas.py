"""Request/response bodies for the HTTP service.

Response shapes mirror the shipped JSON report schemas; the CLI
serializes responses with the canonical encoder, so any service instance
(in-process or remote) yields byte-identical reports for equal inputs.
"""

from __future__ import annotations

from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field

from ..montecarlo import ExperimentConfig
from ..reports import SCHEMA_VERSION


class EstimateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    values: list[float] = Field(min_length=2)
    functional: str
    tau2: bool = False
    bootstrap_reps: int | None = Field(default=None, ge=1)
    bound: Union[float, Literal["auto", "inf"]] = "inf"
    seed: int = Field(default=0, ge=0, lt=1 << 64)


class EstimateResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal["estimate"] = "estimate"
    n: int
    t_full: float
    v_jack: float
    ij: float
    tau2: float | None = None
    bootstrap_variance: float | None = None
    bound: float | None = None


class OracleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    functional: str
    population: str


class OracleResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal["oracle"] = "oracle"
    functional: str
    population: str
    sigma2: float
    avar_vjack: float
    var_phi2: float
    method: dict


class ExperimentRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    functional: str
    population: str
    n_values: list[int] = Field(min_length=1)
    replications: int
    master_seed: int
    estimators: list[str] = ["v_jack", "ij"]
    bootstrap_reps: int = 1000

    def to_config(self) -> ExperimentConfig:
        """Semantic validation lives in ExperimentConfig itself."""
        return ExperimentConfig(
            functional=self.functional,
            population=self.population,
            n_values=tuple(self.n_values),
            replications=self.replications,
            master_seed=self.master_seed,
            estimators=tuple(self.estimators),
            bootstrap_reps=self.bootstrap_reps,
        )


class ExperimentResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal["experiment"] = "experiment"
    config: dict
    oracle: dict
    results: list[dict]
    elapsed_seconds: float


class SweepResponse(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal["sweep"] = "sweep"
    config: dict
    oracle: dict
    rows: list[dict]
    mean_square_scaled_diff: list[dict]
    mean_square_nonincreasing: bool
    elapsed_seconds: float
