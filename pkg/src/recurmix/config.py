"""Experiment configuration: one JSON document, validated before any simulation.

Unknown keys are rejected at every level so that a typo cannot silently
fall back to a default. Example::

    {
      "target": {"kind": "two_mode", "a": 2.0},
      "subsets": {"component": 0, "a": 1.0, "b": 1.0},
      "proposal": {"sigma2": 3.25},
      "chain": {"n_iter": 100000, "seed": 7, "replicates": 4},
      "sweep": {"log_grid": {"center": 3.25, "half_width": 5}},
      "analysis": {"fit": true, "bounds": true, "bounds_k": 10}
    }
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import (BaseModel, ConfigDict, Field, NonNegativeFloat, NonNegativeInt,
                      PositiveFloat, PositiveInt, ValidationError, model_validator)

from .errors import ConfigError
from .rng import MAX_SEED
from .sampler import ChainConfig, ProposalConfig
from .targets import Cycle, SubsetPair, TargetDensity, make_target, subset_pair
from .tuning import MIN_CHAIN_LENGTH, SweepConfig, log_grid


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MultiNormalCfg(_Strict):
    kind: Literal["multi_normal"]
    d: PositiveInt
    sigma1: PositiveFloat = 1.0
    phi_variance: PositiveFloat = 1.0


class TwoModeCfg(_Strict):
    kind: Literal["two_mode"]
    a: PositiveFloat
    phi_variance: PositiveFloat = 1.0


class ScaleProblemCfg(_Strict):
    kind: Literal["scale_problem"]
    sigma1: PositiveFloat
    region: Literal["ordered", "cross"] = "ordered"


class CauchyCfg(_Strict):
    kind: Literal["cauchy"]
    location: float = 0.0
    scale: PositiveFloat = 1.0


class CycleCfg(_Strict):
    kind: Literal["cycle"]
    n: PositiveInt


TargetCfg = Annotated[Union[MultiNormalCfg, TwoModeCfg, ScaleProblemCfg, CauchyCfg, CycleCfg],
                      Field(discriminator="kind")]


class SubsetCfg(_Strict):
    """``A = {x_c < a}``, ``B = {x_c > b}``; ``component="all"`` gives the box form."""

    component: Union[NonNegativeInt, Literal["all"]] = 0
    a: float
    b: float

    @model_validator(mode="after")
    def _ordered(self):
        if self.a > self.b:
            raise ValueError("subset thresholds need a <= b so that A and B are disjoint")
        return self


class ProposalCfg(_Strict):
    sigma2: PositiveFloat = 1.0
    scales: list[PositiveFloat] | None = None
    phi_variance: PositiveFloat = 1.0


class ChainCfg(_Strict):
    n_iter: PositiveInt
    burn_in: NonNegativeInt | None = None
    seed: int = Field(0, ge=0, le=MAX_SEED)
    replicates: PositiveInt = 1
    sampler: Literal["rw", "independence", "cycle"] = "rw"
    initial_state: Union[Literal["target", "origin"], list[float]] = "target"
    start_counts_as_entry: bool = True

    @model_validator(mode="after")
    def _burn(self):
        if self.burn_in is not None and self.burn_in > self.n_iter:
            raise ValueError("burn_in cannot exceed n_iter")
        return self


class LogGridCfg(_Strict):
    center: PositiveFloat
    half_width: PositiveInt = 5
    per_decade: PositiveInt = 15


class SweepCfg(_Strict):
    sigma_grid: list[PositiveFloat] | None = None
    log_grid: LogGridCfg | None = None

    @model_validator(mode="after")
    def _one_grid(self):
        if (self.sigma_grid is None) == (self.log_grid is None):
            raise ValueError("give exactly one of sigma_grid or log_grid")
        if self.sigma_grid is not None:
            g = self.sigma_grid
            if not g:
                raise ValueError("sigma_grid is empty")
            if any(b <= a for a, b in zip(g, g[1:])):
                raise ValueError("sigma_grid must be strictly increasing")
        return self

    def grid(self) -> tuple[float, ...]:
        if self.sigma_grid is not None:
            return tuple(self.sigma_grid)
        lg = self.log_grid
        return tuple(float(s) for s in log_grid(lg.center, lg.half_width, lg.per_decade))


class AnalysisCfg(_Strict):
    fit: bool = False
    bounds: bool = False
    bounds_k: PositiveInt = 10
    c: NonNegativeFloat = 0.0
    variance_curve_k_max: PositiveInt | None = None


class ExperimentConfig(_Strict):
    target: TargetCfg
    subsets: SubsetCfg | None = None
    proposal: ProposalCfg = ProposalCfg()
    chain: ChainCfg
    sweep: SweepCfg | None = None
    analysis: AnalysisCfg = AnalysisCfg()

    @model_validator(mode="after")
    def _consistent(self):
        is_cycle = self.target.kind == "cycle"
        if is_cycle != (self.chain.sampler == "cycle"):
            raise ValueError("the cycle target and the cycle sampler go together")
        if not is_cycle and self.subsets is None:
            raise ValueError("subsets are required for continuous targets")
        if is_cycle and self.subsets is not None:
            raise ValueError("the cycle target fixes its own subsets (odd/even states)")
        if self.subsets is not None and self.subsets.component != "all":
            dim = getattr(self.target, "d", 2 if self.target.kind == "scale_problem" else 1)
            if self.subsets.component >= dim:
                raise ValueError(f"subset component {self.subsets.component} exceeds dimension {dim}")
        return self

    # -- builders ---------------------------------------------------------
    def build_target(self) -> TargetDensity | Cycle:
        return make_target(**self.target.model_dump())

    def build_subsets(self) -> SubsetPair | None:
        if self.subsets is None:
            return None
        s = self.subsets
        return subset_pair(s.component, s.a, s.b, self.build_target())

    def build_proposal(self, sigma2: float | None = None) -> ProposalConfig:
        p = self.proposal
        return ProposalConfig(p.sigma2 if sigma2 is None else sigma2, p.scales, p.phi_variance)

    def build_chain(self, *key: int, seed: int | None = None) -> ChainConfig:
        c = self.chain
        init = c.initial_state if isinstance(c.initial_state, str) else tuple(c.initial_state)
        return ChainConfig(c.n_iter, c.burn_in, c.seed if seed is None else seed, init, key)

    def build_sweep(self, seed: int | None = None) -> SweepConfig:
        if self.sweep is None:
            raise ConfigError("config has no 'sweep' section")
        if self.chain.sampler == "cycle":
            raise ConfigError("sweeps need a continuous target")
        if self.chain.n_iter < MIN_CHAIN_LENGTH:
            raise ConfigError(f"sweeps need chain.n_iter >= {MIN_CHAIN_LENGTH}")
        p = self.proposal
        return SweepConfig(self.build_target(), self.build_subsets(), self.sweep.grid(),
                           self.chain.n_iter, self.chain.replicates,
                           self.chain.seed if seed is None else seed, self.chain.burn_in,
                           self.chain.sampler, None if p.scales is None else tuple(p.scales),
                           p.phi_variance)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def parse_config(data: dict | str) -> ExperimentConfig:
    """Validate a config mapping or JSON string; raises :class:`ConfigError`."""
    try:
        if isinstance(data, str):
            return ExperimentConfig.model_validate_json(data)
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
