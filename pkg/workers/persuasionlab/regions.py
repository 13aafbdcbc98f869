"""Learning the receiver's best-response regions inside the search space.

``find_polytopes`` first closes every full-dimensional region by discovering
its separating hyperplanes one at a time, then recovers a face containing the
vertices of each remaining (lower-dimensional) region.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

import structlog

from persuasionlab.errors import (
    AbortReason,
    DegenerateVertexSetError,
    RankDeficientError,
    TrialAbortedError,
)
from persuasionlab.exactnum import ONE, ZERO, bit_complexity, vector_bit_complexity
from persuasionlab.geometry import (
    Halfspace,
    Hyperplane,
    Polytope,
    check_vertex_bits,
    enumerate_cells,
    enumerate_vertices,
    fit_homogeneous_hyperplane,
    minimal_h_representation,
    rank,
    sample_int,
)
from persuasionlab.oracle import ActionOracle, binary_search

if TYPE_CHECKING:
    from collections.abc import Sequence

    import numpy as np

    from persuasionlab.constants import ConstantProfile
    from persuasionlab.geometry import Cell, Point

MAX_FIT_ATTEMPTS = 3

logger = structlog.get_logger()


@dataclass(frozen=True)
class SearchSpace:
    """X_eps: normalized slices with sum over Theta~ of mu_hat_theta x_theta >= 2 eps."""

    epsilon: Fraction
    mu_hat: tuple[Fraction, ...]
    theta_tilde: tuple[int, ...]
    halfspace: Halfspace
    polytope: Polytope

    @classmethod
    def from_estimate(cls, mu_hat: Sequence[Fraction], epsilon: Fraction) -> SearchSpace:
        """Build X_eps from a (frozen) prior estimate."""
        mu_hat = tuple(Fraction(m) for m in mu_hat)
        threshold = 2 * epsilon
        theta_tilde = tuple(theta for theta, m in enumerate(mu_hat) if m > threshold)
        if not theta_tilde:
            raise TrialAbortedError(AbortReason.EMPTY_THETA_TILDE, f"no state has estimate above {threshold}")
        coeffs = tuple(m if theta in theta_tilde else ZERO for theta, m in enumerate(mu_hat))
        halfspace = Halfspace(coeffs, threshold)
        return cls(
            epsilon=Fraction(epsilon),
            mu_hat=mu_hat,
            theta_tilde=theta_tilde,
            halfspace=halfspace,
            polytope=Polytope.simplex(len(mu_hat)).intersect(halfspace),
        )

    @classmethod
    def from_prior(cls, prior: Sequence[Fraction], epsilon: Fraction) -> SearchSpace:
        """X_eps when the prior itself is known."""
        return cls.from_estimate(prior, epsilon)

    @property
    def dim(self) -> int:
        return len(self.mu_hat)

    @property
    def search_bits(self) -> int:
        """B_eps + B_mu_hat."""
        return bit_complexity(self.epsilon) + vector_bit_complexity(self.mu_hat)


@dataclass(frozen=True)
class LearnedHyperplane:
    """A discovered separating hyperplane, oriented toward the region of ``owner``."""

    halfspace: Halfspace
    owner: int
    neighbor: int

    @property
    def hyperplane(self) -> Hyperplane:
        return self.halfspace.boundary


@dataclass(frozen=True)
class RegionCollection:
    """Learned regions R_eps(a); ``None`` marks an empty region."""

    regions: dict[int, Polytope | None]
    closed: frozenset[int]
    learned: tuple[LearnedHyperplane, ...] = ()
    queries: int = 0
    rounds: int = 0
    num_actions: int = field(default=0)

    def region(self, action: int) -> Polytope | None:
        return self.regions.get(action)

    @property
    def hyperplanes(self) -> tuple[Hyperplane, ...]:
        """Distinct learned hyperplanes in discovery order."""
        seen: dict[Hyperplane, None] = {}
        for lh in self.learned:
            seen.setdefault(lh.hyperplane, None)
        return tuple(seen)


def _facet_point(
    d: int,
    facet: int,
    delta: Fraction,
    profile: ConstantProfile,
    rng: np.random.Generator,
    search_bits: int,
) -> Point:
    """A random point of the simplex facet {x_facet = 0}."""
    if d == 2:
        return tuple(ONE if k != facet else ZERO for k in range(d))
    inner = list(sample_int(Polytope.simplex(d - 1), delta, profile, rng, search_bits))
    inner.insert(facet, ZERO)
    return tuple(inner)


def _find_hyperplane_once(
    oracle: ActionOracle,
    action: int,
    region: Polytope,
    x_int: Point,
    outside: Point,
    delta: Fraction,
    profile: ConstantProfile,
    space: SearchSpace,
    rng: np.random.Generator,
) -> LearnedHyperplane:
    d = space.dim
    bits = space.search_bits
    x = sample_int(region, delta, profile, rng, bits)
    if oracle(x) == action:
        boundary = binary_search(oracle, action, x, outside, profile)
    else:
        boundary = binary_search(oracle, action, x_int, x, profile)
    if not region.strictly_contains(boundary):
        raise TrialAbortedError(AbortReason.HYPERPLANE_MISMATCH, "boundary point is not interior to the region")

    alpha = profile.offset_scale(d, boundary, bits)
    same: list[Point] = []
    other: list[Point] = []
    for facet in range(d):
        target = _facet_point(d, facet, delta, profile, rng, bits)
        plus = tuple(c + alpha * (t - c) for c, t in zip(boundary, target, strict=True))
        minus = tuple(c - alpha * (t - c) for c, t in zip(boundary, target, strict=True))
        if oracle(plus) == action:
            same.append(plus)
            other.append(minus)
        else:
            same.append(minus)
            other.append(plus)

    points = [boundary]
    for i in range(d):
        for k in range(d):
            if i == k or rank(points) == d - 1:
                continue
            if oracle(same[i]) != action or oracle(other[k]) == action:
                continue
            candidate = binary_search(oracle, action, same[i], other[k], profile)
            if rank([*points, candidate]) > len(points):
                points.append(candidate)
    hyperplane = fit_homogeneous_hyperplane(points)

    side = hyperplane.evaluate(x_int)
    if side == 0:
        raise RankDeficientError("interior point lies on the fitted hyperplane")
    positive, negative = hyperplane.sides()
    halfspace = positive if side > 0 else negative
    neighbor = next((oracle(p) for p in other if oracle(p) != action), oracle(outside))
    return LearnedHyperplane(halfspace=halfspace, owner=action, neighbor=neighbor)


def find_hyperplane(
    oracle: ActionOracle,
    action: int,
    region: Polytope,
    x_int: Point,
    outside: Point,
    delta: Fraction,
    profile: ConstantProfile,
    space: SearchSpace,
    rng: np.random.Generator,
) -> LearnedHyperplane:
    """Discover a separating hyperplane of ``action`` crossing the interior of ``region``.

    ``x_int`` induces ``action``; ``outside`` is a point of ``region`` that does not.
    Rank-deficient fits are retried with fresh samples.
    """
    for attempt in range(1, MAX_FIT_ATTEMPTS + 1):
        try:
            return _find_hyperplane_once(oracle, action, region, x_int, outside, delta, profile, space, rng)
        except RankDeficientError as exc:
            logger.warning("hyperplane fit failed", action=action, attempt=attempt, error=str(exc))
    raise TrialAbortedError(AbortReason.RANK_DEFICIENT, f"{MAX_FIT_ATTEMPTS} fits failed for action {action}")


def _uncovered_cell(space: SearchSpace, closed: dict[int, Polytope], learned: Sequence[LearnedHyperplane]) -> Cell | None:
    planes = list(dict.fromkeys(lh.hyperplane for lh in learned))
    for cell in enumerate_cells(planes, space.polytope):
        if not any(region.contains(cell.point) for region in closed.values()):
            return cell
    return None


def find_fully_dimensional_regions(
    oracle: ActionOracle,
    space: SearchSpace,
    zeta: Fraction,
    profile: ConstantProfile,
    rng: np.random.Generator,
    num_actions: int,
) -> tuple[dict[int, Polytope], list[LearnedHyperplane]]:
    """Close every full-dimensional best-response region of X_eps."""
    d, n = space.dim, num_actions
    bits = space.search_bits
    delta = zeta / (2 * n * n * (2 * (d + n) + n))
    closed: dict[int, Polytope] = {}
    learned: list[LearnedHyperplane] = []

    while (cell := _uncovered_cell(space, closed, learned)) is not None:
        try:
            x_int = sample_int(cell.polytope, delta, profile, rng, bits)
        except DegenerateVertexSetError as exc:
            raise TrialAbortedError(AbortReason.DEGENERATE_VERTEX_SET, str(exc)) from exc
        action = oracle(x_int)
        if action in closed:
            raise TrialAbortedError(AbortReason.REGION_REVISITED, f"uncovered cell answered closed action {action}")
        log = logger.bind(action=action)
        region = space.polytope
        confirmed: set[Point] = set()
        while True:
            for vertex in enumerate_vertices(region):
                if vertex in confirmed:
                    continue
                lam = profile.pull_in_weight(d, x_int, vertex, bits)
                pulled = tuple(lam * a + (1 - lam) * b for a, b in zip(x_int, vertex, strict=True))
                if oracle(pulled) == action:
                    confirmed.add(vertex)
                    continue
                found = find_hyperplane(oracle, action, region, x_int, pulled, delta, profile, space, rng)
                if found.halfspace in region.inequalities:
                    raise TrialAbortedError(AbortReason.HYPERPLANE_MISMATCH, "rediscovered a known constraint")
                learned.append(found)
                region = region.intersect(found.halfspace)
                log.debug("hyperplane learned", neighbor=found.neighbor, coeffs=[str(c) for c in found.halfspace.coeffs])
                break
            else:
                break
        if profile.assert_vertex_bits:
            check_vertex_bits(region, profile.vertex_bit_bound(d, bits))
        closed[action] = region
        log.info("region closed", vertices=len(region.vertices), queries=oracle.queries)
    return closed, learned


def find_face(oracle: ActionOracle, closed: dict[int, Polytope], action: int) -> Polytope | None:
    """A face of a closed region containing every closed-region vertex that induces ``action``.

    Returns ``None`` when no such vertex exists.
    """
    representations = {a: minimal_h_representation(closed[a]) for a in sorted(closed)}
    vertices = sorted({v for a in sorted(closed) for v in enumerate_vertices(closed[a])})
    observed: list[Point] = []
    tight: dict[int, set[int] | None] = dict.fromkeys(representations)
    for vertex in vertices:
        if oracle(vertex) != action:
            continue
        observed.append(vertex)
        for a, rep in representations.items():
            through = {i for i, h in enumerate(rep.inequalities) if h.slack(vertex) == 0}
            previous = tight[a]
            tight[a] = through if previous is None else previous & through
    if not observed:
        return None
    for a, rep in representations.items():
        planes = [rep.inequalities[i].boundary for i in sorted(tight[a] or ())]
        face = rep.restrict(*planes)
        if not face.is_empty and all(face.contains(v) for v in observed):
            return face
    raise TrialAbortedError(AbortReason.FACE_NOT_FOUND, f"no closed region has a face holding action {action}")


def find_polytopes(
    oracle: ActionOracle,
    space: SearchSpace,
    zeta: Fraction,
    profile: ConstantProfile,
    rng: np.random.Generator,
    num_actions: int,
) -> RegionCollection:
    """Learn R_eps(a) for every action."""
    closed, learned = find_fully_dimensional_regions(oracle, space, zeta, profile, rng, num_actions)
    regions: dict[int, Polytope | None] = dict(closed)
    for action in range(num_actions):
        if action not in closed:
            regions[action] = find_face(oracle, closed, action)
    logger.info(
        "regions learned",
        closed=sorted(closed),
        faces=sorted(a for a, r in regions.items() if a not in closed and r is not None),
        hyperplanes=len(learned),
        queries=oracle.queries,
        rounds=oracle.rounds,
    )
    return RegionCollection(
        regions=regions,
        closed=frozenset(closed),
        learned=tuple(learned),
        queries=oracle.queries,
        rounds=oracle.rounds,
        num_actions=num_actions,
    )
