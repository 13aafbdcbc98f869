"""Tests for learning best-response regions through the action oracle."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from persuasionlab.constants import ConstantProfile
from persuasionlab.environment import Environment, OracleMode
from persuasionlab.errors import AbortReason, TrialAbortedError
from persuasionlab.generators import gen_hardness2_known, gen_hardness3
from persuasionlab.geometry import Halfspace, Hyperplane
from persuasionlab.oracle import ActionOracle
from persuasionlab.persuasion import Instance, true_hyperplanes
from persuasionlab.regions import (
    SearchSpace,
    find_face,
    find_fully_dimensional_regions,
    find_hyperplane,
    find_polytopes,
)

F = Fraction


def _direct_oracle(instance: Instance) -> ActionOracle:
    return ActionOracle(Environment(instance, seed=0, oracle_mode=OracleMode.DIRECT), budget=1)


@pytest.fixture
def instance() -> Instance:
    """Two full-dimensional regions split at x0 = 3 x1; action 2 only at the vertex (1, 0)."""
    return gen_hardness2_known(F(1, 16), 1)


@pytest.fixture
def space(instance: Instance) -> SearchSpace:
    """A search space that covers the whole simplex."""
    return SearchSpace.from_prior(instance.prior, F(1, 64))


def test_search_space_keeps_likely_states() -> None:
    """Only states estimated above 2 eps should enter the defining halfspace."""
    space = SearchSpace.from_estimate((F(9, 10), F(1, 10)), F(1, 16))
    assert space.theta_tilde == (0,)
    assert space.halfspace == Halfspace((F(1), F(0)), F(5, 36))
    assert space.polytope.vertices == ((F(5, 36), F(31, 36)), (F(1), F(0)))
    assert space.dim == 2
    assert space.search_bits > 0


def test_search_space_aborts_when_no_state_is_likely() -> None:
    """An estimate with no state above 2 eps should abort the trial."""
    with pytest.raises(TrialAbortedError) as exc_info:
        SearchSpace.from_estimate((F(1, 2), F(1, 2)), F(1, 4))
    assert exc_info.value.reason is AbortReason.EMPTY_THETA_TILDE


def test_find_hyperplane_recovers_the_true_boundary(instance: Instance, space: SearchSpace) -> None:
    """A point outside action 0's region should reveal H_01 oriented toward action 0."""
    found = find_hyperplane(
        _direct_oracle(instance),
        0,
        space.polytope,
        (F(7, 8), F(1, 8)),
        (F(1, 2), F(1, 2)),
        F(1, 100),
        ConstantProfile(),
        space,
        np.random.default_rng(3),
    )
    assert found.hyperplane == Hyperplane((F(1), F(-3)))
    assert found.hyperplane in true_hyperplanes(instance)
    assert found.halfspace == Halfspace((F(1), F(-3)))
    assert (found.owner, found.neighbor) == (0, 1)


def test_fully_dimensional_regions(instance: Instance, space: SearchSpace) -> None:
    """Both full-dimensional regions should close along the true hyperplane."""
    closed, learned = find_fully_dimensional_regions(
        _direct_oracle(instance), space, F(1, 10), ConstantProfile(), np.random.default_rng(0), instance.n
    )
    assert set(closed) == {0, 1}
    assert closed[0].vertices == ((F(3, 4), F(1, 4)), (F(1), F(0)))
    assert closed[1].vertices == ((F(0), F(1)), (F(3, 4), F(1, 4)))
    assert {lh.hyperplane for lh in learned} == {Hyperplane((F(1), F(-3)))}
    assert all({lh.owner, lh.neighbor} == {0, 1} for lh in learned)


def test_find_polytopes_recovers_lower_dimensional_region(instance: Instance, space: SearchSpace) -> None:
    """Action 2 should be recovered as the single vertex where it is played."""
    oracle = _direct_oracle(instance)
    regions = find_polytopes(oracle, space, F(1, 10), ConstantProfile(), np.random.default_rng(1), instance.n)
    assert regions.closed == frozenset({0, 1})
    face = regions.region(2)
    assert face is not None
    assert face.vertices == ((F(1), F(0)),)
    assert regions.hyperplanes == (Hyperplane((F(1), F(-3))),)
    assert set(regions.hyperplanes) <= true_hyperplanes(instance)
    assert regions.queries == oracle.queries
    assert regions.rounds == 0


def test_find_face_returns_none_for_unseen_action(instance: Instance, space: SearchSpace) -> None:
    """An action induced at no closed-region vertex should get no face."""
    oracle = _direct_oracle(instance)
    closed, _ = find_fully_dimensional_regions(
        oracle, space, F(1, 10), ConstantProfile(), np.random.default_rng(0), instance.n
    )
    assert find_face(oracle, {1: closed[1]}, 2) is None


def test_hardness3_regions() -> None:
    """Two regions meet at the midpoint; actions 2 and 3 survive only as single points."""
    instance = gen_hardness3(1, F(1, 8))
    space = SearchSpace.from_prior(instance.prior, F(1, 64))
    regions = find_polytopes(
        _direct_oracle(instance), space, F(1, 10), ConstantProfile(), np.random.default_rng(2), instance.n
    )
    assert regions.closed == frozenset({0, 1})
    assert regions.region(2).vertices == ((F(1, 2), F(1, 2)),)
    assert regions.region(3).vertices == ((F(0), F(1)),)
    assert regions.hyperplanes == (Hyperplane((F(1), F(-1))),)
    assert set(regions.hyperplanes) <= true_hyperplanes(instance)


def test_find_polytopes_in_simulated_mode(instance: Instance, space: SearchSpace) -> None:
    """Played queries should recover the same regions and charge the rounds they used."""
    env = Environment(instance, seed=5)
    oracle = ActionOracle(env, budget=1000)
    regions = find_polytopes(oracle, space, F(1, 10), ConstantProfile(), np.random.default_rng(1), instance.n)
    assert regions.closed == frozenset({0, 1})
    assert regions.region(2).vertices == ((F(1), F(0)),)
    assert regions.hyperplanes == (Hyperplane((F(1), F(-3))),)
    assert regions.rounds == oracle.rounds == env.t - 1
    assert regions.rounds >= regions.queries


@pytest.mark.parametrize("learner_seed", [0, 4])
def test_direct_and_simulated_learn_the_same_regions(
    instance: Instance, space: SearchSpace, learner_seed: int
) -> None:
    """Both oracle modes answer every slice alike, so one learner seed should see identical runs."""
    learned = []
    for mode in (OracleMode.DIRECT, OracleMode.SIMULATED):
        oracle = ActionOracle(Environment(instance, seed=9, oracle_mode=mode), budget=1000)
        learned.append(
            find_polytopes(
                oracle, space, F(1, 10), ConstantProfile(), np.random.default_rng(learner_seed), instance.n
            )
        )
    direct, simulated = learned
    assert direct.closed == simulated.closed
    assert direct.hyperplanes == simulated.hyperplanes
    for a in range(instance.n):
        assert direct.region(a) == simulated.region(a)
    assert direct.queries == simulated.queries
    assert direct.rounds == 0 < simulated.rounds
