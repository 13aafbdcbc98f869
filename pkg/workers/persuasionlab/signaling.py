"""Signaling schemes from learned regions, and the vertex-program test oracles."""

from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING

import structlog

from persuasionlab.errors import InvariantViolationError, MembershipViolationError
from persuasionlab.exactnum import ONE, ZERO
from persuasionlab.geometry import Halfspace, Hyperplane, Polytope
from persuasionlab.lp import Constraint, LinearProgram, Relation, solve
from persuasionlab.persuasion import SignalingScheme, best_response_region, chosen_action

if TYPE_CHECKING:
    from collections.abc import Sequence

    from persuasionlab.geometry import Point
    from persuasionlab.persuasion import Instance
    from persuasionlab.regions import RegionCollection, SearchSpace

OUTSIDE_SIGNAL = "s*"

logger = structlog.get_logger()


def _homogenize(coeffs: Sequence[Fraction], offset: Fraction) -> tuple[Fraction, ...]:
    # On sum(x) = 1, c . x >= b is (c - b 1) . x >= 0; the cone over the region keeps that form.
    return tuple(c - offset for c in coeffs)


def lift_to_box(region: Polytope | None, d: int) -> Polytope:
    """Slices in [0, 1]^d whose normalization lies in ``region``, as an H-polytope.

    Every alpha x with x in ``region`` and alpha in [0, 1] is a member. An empty
    region lifts to the single point 0.
    """
    if region is None or region.is_empty:
        origin = tuple(Hyperplane(tuple(ONE if k == i else ZERO for k in range(d)), ZERO) for i in range(d))
        return Polytope(d, origin)
    normalization = Hyperplane.normalization(d)
    equalities = tuple(
        Hyperplane(coeffs, ZERO)
        for e in region.equalities
        if e != normalization and any(coeffs := _homogenize(e.coeffs, e.offset))
    )
    inequalities = tuple(
        Halfspace(coeffs, ZERO) for h in region.inequalities if any(coeffs := _homogenize(h.coeffs, h.offset))
    )
    box = Polytope.box(d)
    return Polytope(d, equalities, inequalities + box.inequalities)


def _is_nonnegativity(h: Halfspace) -> bool:
    return h.offset == 0 and sum(1 for c in h.coeffs if c) == 1 and max(h.coeffs) > 0


def solve_signaling_program(
    regions: RegionCollection,
    space: SearchSpace,
    mu_hat: Sequence[Fraction],
    sender_utility: Sequence[Sequence[Fraction]],
) -> tuple[Fraction, SignalingScheme]:
    """Maximize estimated sender utility over one lifted slice per action.

    Variables are ``x^a_theta`` at index ``a * d + theta``. Returns the optimal
    value and the scheme with signal ``s*`` plus one signal ``s{a}`` per action.
    """
    d, n = space.dim, regions.num_actions

    def var(a: int, theta: int) -> int:
        return a * d + theta

    width = n * d
    rows: list[Constraint] = []
    upper: list[Fraction | None] = [None] * width
    for a in range(n):
        region = regions.region(a)
        if region is None or region.is_empty:
            for theta in range(d):
                upper[var(a, theta)] = ZERO
            continue
        lifted = lift_to_box(region, d)
        for e in lifted.equalities:
            coeffs = [ZERO] * width
            coeffs[a * d : (a + 1) * d] = e.coeffs
            rows.append(Constraint(tuple(coeffs), Relation.EQ, ZERO))
        for h in lifted.inequalities:
            # x >= 0 is the default bound and x <= 1 follows from the coupling rows.
            if _is_nonnegativity(h) or h.offset != 0:
                continue
            coeffs = [ZERO] * width
            coeffs[a * d : (a + 1) * d] = h.coeffs
            rows.append(Constraint(tuple(coeffs), Relation.GE, ZERO))
    for theta in range(d):
        coeffs = [ZERO] * width
        for a in range(n):
            coeffs[var(a, theta)] = ONE
        rows.append(Constraint(tuple(coeffs), Relation.LE, ONE))

    objective = tuple(mu_hat[theta] * sender_utility[theta][a] for a in range(n) for theta in range(d))
    solution = solve(
        LinearProgram(objective=objective, rows=tuple(rows), lower=tuple([ZERO] * width), upper=tuple(upper))
    )
    if not solution.is_optimal or solution.point is None or solution.value is None:
        raise InvariantViolationError(f"signaling program is {solution.status}; the zero slice is always feasible")

    slices = [tuple(solution.point[var(a, theta)] for theta in range(d)) for a in range(n)]
    rest = tuple(ONE - sum((s[theta] for s in slices), ZERO) for theta in range(d))
    signals = [OUTSIDE_SIGNAL, *(f"s{a}" for a in range(n))]
    active = [a for a, s in enumerate(slices) if any(s)]
    logger.debug("signaling program solved", value=str(solution.value), active=active)
    return solution.value, SignalingScheme.from_slices(signals, [rest, *slices])


def compute_signaling(
    regions: RegionCollection,
    space: SearchSpace,
    mu_hat: Sequence[Fraction],
    sender_utility: Sequence[Sequence[Fraction]],
) -> SignalingScheme:
    """The scheme that commits to the optimum of the lifted-region program."""
    return solve_signaling_program(regions, space, mu_hat, sender_utility)[1]


def _true_regions(instance: Instance, space: SearchSpace) -> dict[int, Polytope]:
    regions = {}
    for a in range(instance.n):
        region = best_response_region(instance, a, space.polytope)
        if not region.is_empty:
            regions[a] = region
    return regions


def lp_vertices_oracle(instance: Instance, space: SearchSpace) -> Fraction:
    """Value of the program that mixes vertices of the true regions X_eps(a).

    Each (vertex, action) pair is one variable; duplicate vertices do not change the value.
    """
    pairs: list[tuple[Point, int]] = sorted(
        {(v, a) for a, region in _true_regions(instance, space).items() for v in region.vertices}
    )
    if not pairs:
        return ZERO
    d = instance.d
    objective = tuple(
        sum((instance.sender_weights[theta][a] * v[theta] for theta in range(d)), ZERO) for v, a in pairs
    )
    rows = tuple(Constraint(tuple(v[theta] for v, _ in pairs), Relation.LE, ONE) for theta in range(d))
    solution = solve(LinearProgram(objective=objective, rows=rows))
    assert solution.value is not None
    return solution.value


def decompose_slice(x: Sequence[Fraction], instance: Instance, space: SearchSpace) -> dict[Point, Fraction]:
    """Convex weights over the vertices of the true region of ``x`` that reproduce ``x``."""
    x = tuple(Fraction(c) for c in x)
    region = best_response_region(instance, chosen_action(instance, x), space.polytope)
    if not region.contains(x):
        raise MembershipViolationError(f"slice {[str(c) for c in x]} lies outside its region in the search space")
    vertices = region.vertices
    rows = [Constraint(tuple(v[theta] for v in vertices), Relation.EQ, x[theta]) for theta in range(instance.d)]
    rows.append(Constraint(tuple([ONE] * len(vertices)), Relation.EQ, ONE))
    solution = solve(LinearProgram(objective=tuple([ZERO] * len(vertices)), rows=tuple(rows)))
    if solution.point is None:
        raise InvariantViolationError("a point of a polytope must be a convex combination of its vertices")
    return {v: w for v, w in zip(vertices, solution.point, strict=True) if w}
