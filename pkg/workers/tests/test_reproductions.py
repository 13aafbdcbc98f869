"""Multi-seed reproductions; run with ``-m slow``."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from persuasionlab.constants import ConstantProfile
from persuasionlab.environment import Environment, OracleMode
from persuasionlab.errors import EqualActionsError
from persuasionlab.generators import gen_hardness2_known, gen_random_instance
from persuasionlab.geometry import Halfspace, Polytope, sample_int
from persuasionlab.harness import run_experiment_async, run_trial
from persuasionlab.learner import build_search_space, check_search_space, phase1_rounds
from persuasionlab.models import ExperimentConfig, TrialStatus
from persuasionlab.oracle import ActionOracle, binary_search
from persuasionlab.pac import pac_phase1_rounds
from persuasionlab.persuasion import (
    best_response_region,
    chosen_action,
    compute_opt,
    sender_expected_utility,
    separating_halfspace,
)
from persuasionlab.regions import RegionCollection, SearchSpace
from persuasionlab.signaling import lp_vertices_oracle, solve_signaling_program

F = Fraction

pytestmark = pytest.mark.slow


def _random_cases(count: int) -> list[tuple[int, int, int]]:
    sizes = [(d, n) for d in (2, 3) for n in (2, 3, 4)]
    return [(*sizes[k % len(sizes)], k) for k in range(count)]


def test_exact_hyperplane_recovery() -> None:
    """Direct-mode region learning should be exact on at least 48 of 50 random instances."""
    exact = 0
    for d, n, seed in _random_cases(50):
        config = ExperimentConfig.model_validate(
            {
                "mode": "geometry_only",
                "instance": {"kind": "random", "d": d, "n": n, "bit_cap": 6},
                "oracle_mode": "direct",
                "eta": "1/50",
                "learner": {"profile": {"assert_vertex_bits": True}},
            }
        )
        if run_trial(config, seed).summary.success:
            exact += 1
    assert exact >= 48


def test_signaling_program_chain() -> None:
    """With the exact prior the program should beat the vertex program and lose at most 10 eps n d to OPT."""
    epsilon = F(1, 64)
    for d, n, seed in _random_cases(30):
        instance = gen_random_instance(d, n, 6, seed)
        space = SearchSpace.from_prior(instance.prior, epsilon)
        regions = RegionCollection(
            regions={a: best_response_region(instance, a, space.polytope) for a in range(n)},
            closed=frozenset(),
            num_actions=n,
        )
        value, scheme = solve_signaling_program(regions, space, instance.prior, instance.sender_utility)
        opt, _ = compute_opt(instance)
        assert value >= lp_vertices_oracle(instance, space)
        assert sender_expected_utility(instance, scheme) >= value
        assert sender_expected_utility(instance, scheme) >= opt - 10 * epsilon * n * d


def test_phase1_clean_event_frequency() -> None:
    """Both phase-1 sample sizes should meet their clean-event properties in at least 1 - 2 delta of runs."""
    instance = gen_hardness2_known(F(1, 16), 1)
    epsilon, delta, runs = F(1, 16), F(1, 20), 200
    regret_hits = pac_hits = 0
    for seed in range(runs):
        space = build_search_space(Environment(instance, seed), phase1_rounds(epsilon, 2, delta), epsilon)
        regret_hits += check_search_space(space, instance.prior).holds
        space = build_search_space(Environment(instance, seed + runs), pac_phase1_rounds(epsilon, 2, delta), epsilon)
        pac_hits += check_search_space(space, instance.prior, pac=True).holds
    assert regret_hits >= (1 - 2 * delta) * runs
    assert pac_hits >= (1 - 2 * delta) * runs


def test_pac_success_rate() -> None:
    """PAC runs on the indistinguishable pair's first instance should succeed in at least 26 of 30 seeds."""
    config = ExperimentConfig.model_validate(
        {
            "mode": "pac",
            "instance": {"kind": "hardness3", "epsilon": "1/8", "which": 1},
            "gamma": "1/10",
            "eta": "1/10",
            "oracle_mode": "direct",
            "learner": {"epsilon": "1/32"},
        }
    )
    wins = sum(1 for seed in range(30) if run_trial(config, seed).summary.success)
    assert wins >= 26


def test_binary_search_lands_on_region_boundary() -> None:
    """Recovered crossings should lie exactly on a separating hyperplane of the inside region."""
    profile = ConstantProfile()
    simplex = Polytope.simplex(3)
    checked = 0
    seed = 0
    while checked < 50:
        instance = gen_random_instance(3, 3, 6, seed)
        rng = np.random.default_rng(seed)
        seed += 1
        oracle = ActionOracle(Environment(instance, 0, oracle_mode=OracleMode.DIRECT), budget=1)
        inside = sample_int(simplex, F(1, 100), profile, rng)
        outside = sample_int(simplex, F(1, 100), profile, rng)
        action = chosen_action(instance, inside)
        if chosen_action(instance, outside) == action:
            continue
        crossing = binary_search(oracle, action, inside, outside, profile)
        assert best_response_region(instance, action, simplex).contains(crossing)
        slacks = []
        for other in range(instance.n):
            if other == action:
                continue
            try:
                slacks.append(separating_halfspace(instance, action, other).slack(crossing))
            except EqualActionsError:
                continue
        assert min(slacks) == 0
        checked += 1


def test_sample_int_strict_interiority() -> None:
    """Ten thousand draws from a cut simplex should all be strictly interior."""
    region = Polytope.simplex(3).intersect(Halfspace((F(1), F(-2), F(1, 3)), F(0)))
    rng = np.random.default_rng(0)
    profile = ConstantProfile()
    assert all(region.strictly_contains(sample_int(region, F(1, 1000), profile, rng)) for _ in range(10_000))


async def test_reports_do_not_depend_on_worker_count(tmp_path: Path) -> None:
    """Reports written with one and with several workers should be byte-identical."""
    outputs = []
    for workers in (1, 3):
        config = ExperimentConfig.model_validate(
            {
                "mode": "regret",
                "instance": {"kind": "hardness2_known", "gamma": "1/16"},
                "seeds": [2, 0, 1],
                "rounds": 3000,
                "workers": workers,
                "export_transcripts": True,
                "out": str(tmp_path / f"w{workers}"),
            }
        )
        report = await run_experiment_async(config)
        outputs.append({p.name: p.read_bytes() for p in report.files})
    assert outputs[0] == outputs[1]


def test_regret_grows_sublinearly() -> None:
    """Average regret per round should fall as the horizon quadruples, and total regret should grow slower than T.

    Phase 1 alone outlasts T = 2**10 for every epsilon below 1/12, so the sweep starts at 2**12.
    """
    horizons = (1 << 12, 1 << 14, 1 << 16)
    mean_regret = []
    for horizon in horizons:
        config = ExperimentConfig.model_validate(
            {
                "mode": "regret",
                "instance": {"kind": "hardness3", "epsilon": "1/8", "which": 1},
                "rounds": horizon,
                "oracle_mode": "simulated",
                "learner": {"epsilon": "1/16", "resolve_stride": 512},
            }
        )
        summaries = [run_trial(config, seed).summary for seed in range(5)]
        assert all(s.status is TrialStatus.COMPLETED for s in summaries), [s.error for s in summaries]
        mean_regret.append(sum((s.regret for s in summaries), F(0)) / len(summaries))
    per_round = [r / t for r, t in zip(mean_regret, horizons, strict=True)]
    assert per_round[0] > per_round[1] > per_round[2]
    assert all(later <= F(13, 5) * earlier for earlier, later in zip(mean_regret, mean_regret[1:]))


def test_pac_success_rate_on_random_instances() -> None:
    """PAC runs at the computed threshold epsilon should succeed in at least 26 of 30 trials.

    gamma = 1/2 gives epsilon = 1/256 and about 1.4e5 phase-1 rounds per trial; gamma = 1/10
    would need 2.3e6.
    """
    wins = trials = 0
    for instance_seed in range(10):
        config = ExperimentConfig.model_validate(
            {
                "mode": "pac",
                "instance": {"kind": "random", "d": 2, "n": 3, "bit_cap": 6, "seed": instance_seed},
                "gamma": "1/2",
                "eta": "1/10",
                "oracle_mode": "direct",
            }
        )
        for seed in range(3):
            summary = run_trial(config, 100 * instance_seed + seed).summary
            assert summary.epsilon == F(1, 256)
            wins += summary.success
            trials += 1
    assert trials == 30
    assert wins >= 26
