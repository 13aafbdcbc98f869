"""Configuration and result models exchanged between the CLI, the harness and the learners."""

from __future__ import annotations

from enum import StrEnum
from fractions import Fraction
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator

from persuasionlab.constants import ConstantProfile
from persuasionlab.environment import OracleMode
from persuasionlab.errors import AbortReason
from persuasionlab.exactnum import RationalStr


class ExperimentMode(StrEnum):
    """Which procedure a run executes."""

    REGRET = "regret"
    PAC = "pac"
    PAC_KNOWN = "pac_known"
    GEOMETRY_ONLY = "geometry_only"


class InstanceKind(StrEnum):
    """Where the instance of a run comes from."""

    FILE = "file"
    RANDOM = "random"
    HARDNESS1 = "hardness1"
    HARDNESS3 = "hardness3"
    HARDNESS2_KNOWN = "hardness2_known"


class TrialStatus(StrEnum):
    """Outcome of one seeded trial."""

    COMPLETED = "completed"
    ABORTED = "aborted"
    FAILED = "failed"


class InstanceSource(BaseModel):
    """An instance file or a generator with its parameters."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: InstanceKind = InstanceKind.FILE
    path: Path | None = None
    d: int | None = Field(default=None, ge=2)
    n: int | None = Field(default=None, ge=2)
    bit_cap: int = Field(default=6, ge=2)
    seed: int | None = None
    which: int = Field(default=1, ge=1, le=2)
    epsilon: RationalStr | None = None
    gamma: RationalStr | None = None
    p: list[int] | None = None

    @model_validator(mode="after")
    def _check_parameters(self) -> InstanceSource:
        missing = {
            InstanceKind.FILE: [("path", self.path)],
            InstanceKind.RANDOM: [("d", self.d), ("n", self.n)],
            InstanceKind.HARDNESS1: [("d", self.d), ("p", self.p)],
            InstanceKind.HARDNESS3: [("epsilon", self.epsilon)],
            InstanceKind.HARDNESS2_KNOWN: [("gamma", self.gamma)],
        }[self.kind]
        for name, value in missing:
            if value is None:
                raise ValueError(f"instance kind {self.kind} requires {name}")
        return self


class LearnerConfig(BaseModel):
    """Learner knobs: constants, epsilon override, oracle budget, re-solve stride."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    profile: ConstantProfile = Field(default_factory=ConstantProfile)
    epsilon: RationalStr | None = None
    oracle_budget: int | None = Field(default=None, ge=1)
    resolve_stride: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_epsilon(self) -> LearnerConfig:
        if self.epsilon is not None and not Fraction(0) < self.epsilon < 1:
            raise ValueError(f"epsilon {self.epsilon} must lie in (0, 1)")
        return self


class ExperimentConfig(BaseModel):
    """A complete experiment: mode, instance, seeds and learner settings."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    mode: ExperimentMode
    instance: InstanceSource
    seeds: list[int] = Field(default_factory=lambda: [0])
    rounds: int | None = Field(default=None, ge=1)
    gamma: RationalStr | None = None
    eta: RationalStr | None = None
    oracle_mode: OracleMode = OracleMode.SIMULATED
    learner: LearnerConfig = Field(default_factory=LearnerConfig)
    out: Path = Path("results")
    workers: int | None = Field(default=None, ge=1)
    strict: bool = False
    export_transcripts: bool = False

    @model_validator(mode="after")
    def _check_mode(self) -> ExperimentConfig:
        if self.mode is ExperimentMode.REGRET and self.rounds is None:
            raise ValueError("regret mode requires rounds")
        if self.mode in (ExperimentMode.PAC, ExperimentMode.PAC_KNOWN):
            if self.gamma is None or self.eta is None:
                raise ValueError(f"{self.mode} mode requires gamma and eta")
            for name, value in (("gamma", self.gamma), ("eta", self.eta)):
                if not Fraction(0) < value < 1:
                    raise ValueError(f"{name} {value} must lie in (0, 1)")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        return self


class TrialSummary(BaseModel):
    """One row of the summary CSV."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    seed: int
    mode: ExperimentMode
    status: TrialStatus
    abort_reason: AbortReason | None = None
    rounds_used: int = 0
    epsilon: RationalStr | None = None
    opt: RationalStr | None = None
    achieved: RationalStr | None = None
    regret: RationalStr | None = None
    regret_float: float | None = None
    gamma: RationalStr | None = None
    eta: RationalStr | None = None
    gap: RationalStr | None = None
    success: bool | None = None
    hyperplanes_learned: int | None = None
    hyperplanes_exact: int | None = None
    regions_exact: bool | None = None
    error: str = ""
