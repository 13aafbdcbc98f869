"""Tests for trial orchestration, reports and the lower-bound value checks."""

from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

import pandas as pd
import pytest

from persuasionlab.errors import AbortReason
from persuasionlab.harness import (
    Z_95,
    mean_ci,
    run_experiment,
    run_experiment_async,
    run_oracle_checks,
    run_trial,
    summary_text,
    wilson_interval,
)
from persuasionlab.learner import phase1_rounds
from persuasionlab.models import ExperimentConfig, ExperimentMode, TrialStatus, TrialSummary

F = Fraction

FIXTURES = Path(__file__).parent / "fixtures"

HARDNESS2 = {"kind": "hardness2_known", "gamma": "1/16", "which": 1}


@pytest.fixture
def regret_config(tmp_path: Path) -> ExperimentConfig:
    """A short direct-oracle regret run on the known-prior hardness instance."""
    return ExperimentConfig.model_validate(
        {
            "mode": "regret",
            "instance": HARDNESS2,
            "seeds": [1, 0],
            "rounds": 2000,
            "oracle_mode": "direct",
            "learner": {"epsilon": "1/16"},
            "out": str(tmp_path / "out"),
            "export_transcripts": True,
        }
    )


def test_regret_trial(regret_config: ExperimentConfig) -> None:
    """A regret trial should complete and charge regret to phase 1 only."""
    result = run_trial(regret_config, seed=0)
    summary = result.summary
    assert summary.status is TrialStatus.COMPLETED
    assert summary.rounds_used == 2000
    assert summary.opt == F(5, 8)
    assert summary.regret == phase1_rounds(F(1, 16), 2, F(1, 2000)) * F(1, 8)
    assert result.trace is not None


def test_pac_known_trial(tmp_path: Path) -> None:
    """The known-prior PAC trial should succeed on its own hardness instance."""
    config = ExperimentConfig.model_validate(
        {"mode": "pac_known", "instance": HARDNESS2, "gamma": "1/2", "eta": "1/10", "oracle_mode": "direct"}
    )
    summary = run_trial(config, seed=0).summary
    assert summary.status is TrialStatus.COMPLETED
    assert summary.success
    assert summary.gap == 0


def test_geometry_trial_recovers_exact_regions() -> None:
    """Direct-mode geometry should recover the true hyperplane and regions."""
    config = ExperimentConfig.model_validate(
        {"mode": "geometry_only", "instance": HARDNESS2, "oracle_mode": "direct"}
    )
    summary = run_trial(config, seed=0).summary
    assert summary.status is TrialStatus.COMPLETED
    assert summary.epsilon == F(1, 16)
    assert summary.hyperplanes_learned == summary.hyperplanes_exact == 1
    assert summary.regions_exact
    assert summary.success


def test_missing_instance_file_fails_the_trial(tmp_path: Path) -> None:
    """Unexpected errors should become a failed summary instead of propagating."""
    config = ExperimentConfig.model_validate(
        {"mode": "geometry_only", "instance": {"kind": "file", "path": str(tmp_path / "missing.json")}}
    )
    summary = run_trial(config, seed=0).summary
    assert summary.status is TrialStatus.FAILED
    assert "missing.json" in summary.error


async def test_run_experiment_writes_reports(regret_config: ExperimentConfig) -> None:
    """The experiment should sort results by seed and write every report file."""
    report = await run_experiment_async(regret_config)
    assert [s.seed for s in report.summaries] == [0, 1]
    assert not report.any_aborted
    out = regret_config.out
    names = {p.name for p in report.files}
    assert names == {
        "trace_seed0.csv",
        "trace_seed1.csv",
        "transcript_seed0.csv",
        "transcript_seed1.csv",
        "summary.csv",
        "summary.txt",
    }
    summary = pd.read_csv(out / "summary.csv", dtype={"regret": str})
    assert list(summary["seed"]) == [0, 1]
    assert list(summary["status"]) == ["completed", "completed"]
    trace = pd.read_csv(out / "trace_seed0.csv")
    assert len(trace) == 2000
    assert list(trace.columns) == ["t", "phase", "expected_utility", "realized", "cum_regret", "cum_regret_float"]
    assert "R_T mean" in (out / "summary.txt").read_text()


def test_run_experiment_in_parallel(tmp_path: Path) -> None:
    """The blocking entry point should fan seeds out to worker processes and keep seed order."""
    config = ExperimentConfig.model_validate(
        {
            "mode": "geometry_only",
            "instance": HARDNESS2,
            "seeds": [2, 0, 1],
            "oracle_mode": "direct",
            "workers": 2,
            "out": str(tmp_path / "geo"),
        }
    )
    report = run_experiment(config)
    assert [s.seed for s in report.summaries] == [0, 1, 2]
    assert all(s.success for s in report.summaries)
    assert "exact recovery: 3/3" in (config.out / "summary.txt").read_text()


def test_geometry_reports_match_golden(tmp_path: Path) -> None:
    """Direct-mode geometry reports carry no sampled values, so they should match the stored files."""
    config = ExperimentConfig.model_validate(
        {
            "mode": "geometry_only",
            "instance": {"kind": "file", "path": str(FIXTURES / "hardness2_known.json")},
            "seeds": [1, 0],
            "oracle_mode": "direct",
            "export_transcripts": True,
            "out": str(tmp_path / "geo"),
        }
    )
    report = run_experiment(config)
    golden = FIXTURES / "golden_geometry"
    assert sorted(p.name for p in report.files) == sorted(p.name for p in golden.iterdir())
    for path in report.files:
        assert path.read_bytes() == (golden / path.name).read_bytes(), path.name


def test_mean_ci() -> None:
    """The interval should collapse for one value and use the normal quantile otherwise."""
    assert mean_ci([2.5]) == (2.5, 0.0)
    mean, half = mean_ci([1.0, 3.0])
    assert mean == 2.0
    assert half == pytest.approx(Z_95 * math.sqrt(2) / math.sqrt(2))
    assert all(math.isnan(v) for v in mean_ci([]))


def test_wilson_interval() -> None:
    """The Wilson interval should be symmetric at one half and stay inside [0, 1]."""
    low, high = wilson_interval(5, 10)
    assert low + high == pytest.approx(1.0)
    low, high = wilson_interval(30, 30)
    assert 0 < low < high <= 1 + 1e-12
    assert all(math.isnan(v) for v in wilson_interval(0, 0))


def test_summary_text_counts_aborts() -> None:
    """Abort reasons and PAC success rates should appear in the text summary."""
    config = ExperimentConfig.model_validate(
        {"mode": "pac", "instance": HARDNESS2, "gamma": "1/10", "eta": "1/10"}
    )
    summaries = [
        TrialSummary(seed=0, mode=ExperimentMode.PAC, status=TrialStatus.COMPLETED, success=True, rounds_used=10),
        TrialSummary(
            seed=1,
            mode=ExperimentMode.PAC,
            status=TrialStatus.ABORTED,
            abort_reason=AbortReason.BUDGET_EXHAUSTED,
            success=False,
        ),
    ]
    text = summary_text(config, summaries)
    assert "completed 1, aborted 1, failed 0" in text
    assert "abort budget_exhausted: 1" in text
    assert "success rate: 1/2" in text


def test_oracle_checks_pass() -> None:
    """Every recomputed lower-bound value should match its construction."""
    checks = run_oracle_checks(grid=24)
    assert checks
    assert all(check.ok for check in checks), [c for c in checks if not c.ok]
