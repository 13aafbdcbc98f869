"""Tests for configuration and result models."""

from fractions import Fraction

import pytest
from pydantic import ValidationError

from persuasionlab.constants import ProfileMode
from persuasionlab.environment import OracleMode
from persuasionlab.errors import AbortReason
from persuasionlab.models import (
    ExperimentConfig,
    ExperimentMode,
    InstanceKind,
    InstanceSource,
    LearnerConfig,
    TrialStatus,
    TrialSummary,
)


def test_experiment_config_from_json() -> None:
    """ExperimentConfig should parse rationals and fill in defaults."""
    raw = (
        '{"mode": "pac", "instance": {"kind": "hardness3", "epsilon": "1/8"},'
        ' "gamma": "1/10", "eta": "1/10", "learner": {"profile": {"mode": "theoretical"}}}'
    )
    config = ExperimentConfig.model_validate_json(raw)
    assert config.mode is ExperimentMode.PAC
    assert config.instance.epsilon == Fraction(1, 8)
    assert config.gamma == Fraction(1, 10)
    assert config.seeds == [0]
    assert config.oracle_mode is OracleMode.SIMULATED
    assert config.learner.profile.mode is ProfileMode.THEORETICAL
    assert config.learner.resolve_stride == 1


@pytest.mark.parametrize(
    "data",
    [
        {"mode": "regret", "instance": {"kind": "hardness3", "epsilon": "1/8"}},
        {"mode": "pac", "instance": {"kind": "hardness3", "epsilon": "1/8"}, "gamma": "1/10"},
        {"mode": "pac", "instance": {"kind": "hardness3", "epsilon": "1/8"}, "gamma": "1", "eta": "1/10"},
        {"mode": "geometry_only", "instance": {"kind": "hardness3", "epsilon": "1/8"}, "seeds": [1, 1]},
        {"mode": "geometry_only", "instance": {"kind": "hardness3", "epsilon": "1/8"}, "seeds": []},
        {"mode": "geometry_only", "instance": {"kind": "random", "d": 2}},
        {"mode": "geometry_only", "instance": {"kind": "file"}},
    ],
)
def test_experiment_config_rejects_invalid(data: dict[str, object]) -> None:
    """Missing mode parameters, duplicate seeds and incomplete instance sources should fail."""
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(data)


def test_learner_config_rejects_bad_epsilon() -> None:
    """The epsilon override must lie in (0, 1)."""
    with pytest.raises(ValidationError):
        LearnerConfig(epsilon=Fraction(3, 2))


def test_instance_source_defaults() -> None:
    """Generators should default to the first instance of a pair."""
    source = InstanceSource(kind=InstanceKind.HARDNESS2_KNOWN, gamma=Fraction(1, 16))
    assert source.which == 1
    assert source.bit_cap == 6


def test_trial_summary_to_json() -> None:
    """TrialSummary should serialize rationals as p/q strings."""
    summary = TrialSummary(
        seed=3,
        mode=ExperimentMode.REGRET,
        status=TrialStatus.ABORTED,
        abort_reason=AbortReason.BUDGET_EXHAUSTED,
        regret=Fraction(7, 4),
    )
    data = summary.model_dump(mode="json")
    assert data["status"] == "aborted"
    assert data["abort_reason"] == "budget_exhausted"
    assert data["regret"] == "7/4"
    assert data["opt"] is None
    assert data["error"] == ""


def test_trial_status_values() -> None:
    """TrialStatus enum should have all expected values."""
    assert TrialStatus.COMPLETED == "completed"
    assert TrialStatus.ABORTED == "aborted"
    assert TrialStatus.FAILED == "failed"
