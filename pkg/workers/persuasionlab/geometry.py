"""Exact polytopes in slice space.

Hyperplanes, halfspaces and H-represented polytopes over ``Fraction``, with
brute-force vertex enumeration, redundancy removal, relative-interior tests,
randomized interior sampling and hyperplane-arrangement cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import TYPE_CHECKING

import structlog

from persuasionlab.errors import (
    DegenerateVertexSetError,
    EmptyPolytopeError,
    InvariantViolationError,
    RankDeficientError,
)
from persuasionlab.exactnum import ONE, ZERO, bitlen, common_denominator, dot, dyadic_floor
from persuasionlab.lp import interior_point, is_redundant

if TYPE_CHECKING:
    from collections.abc import Sequence

    import numpy as np

    from persuasionlab.constants import ConstantProfile

Point = tuple[Fraction, ...]

logger = structlog.get_logger()


# --- exact linear algebra ---


def _reduce(rows: Sequence[Sequence[Fraction]], width: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    matrix = [list(map(Fraction, row)) for row in rows]
    pivots: list[int] = []
    r = 0
    for c in range(width):
        found = next((i for i in range(r, len(matrix)) if matrix[i][c]), None)
        if found is None:
            continue
        matrix[r], matrix[found] = matrix[found], matrix[r]
        lead = matrix[r][c]
        matrix[r] = [a / lead for a in matrix[r]]
        for i in range(len(matrix)):
            if i != r and matrix[i][c]:
                factor = matrix[i][c]
                matrix[i] = [a - factor * b for a, b in zip(matrix[i], matrix[r], strict=True)]
        pivots.append(c)
        r += 1
        if r == len(matrix):
            break
    return matrix, pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank of a list of equal-length vectors."""
    if not rows:
        return 0
    return len(_reduce(rows, len(rows[0]))[1])


def nullspace(rows: Sequence[Sequence[Fraction]], width: int) -> list[Point]:
    """Basis of {y : row . y = 0 for every row}."""
    if not rows:
        return [tuple(ONE if k == j else ZERO for k in range(width)) for j in range(width)]
    matrix, pivots = _reduce(rows, width)
    free = [c for c in range(width) if c not in pivots]
    basis = []
    for f in free:
        vector = [ZERO] * width
        vector[f] = ONE
        for r, p in enumerate(pivots):
            vector[p] = -matrix[r][f]
        basis.append(tuple(vector))
    return basis


def solve_square(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Point | None:
    """Unique solution of a square system, or None when singular."""
    width = len(matrix)
    augmented = [[*row, b] for row, b in zip(matrix, rhs, strict=True)]
    reduced, pivots = _reduce(augmented, width)
    if len(pivots) < width:
        return None
    return tuple(reduced[i][width] for i in range(width))


# --- hyperplanes and halfspaces ---


def _leading(coeffs: Sequence[Fraction]) -> Fraction:
    return next((c for c in coeffs if c), ZERO)


@dataclass(frozen=True)
class Hyperplane:
    """The set {x : coeffs . x = offset}, scaled so the first nonzero coefficient is 1."""

    coeffs: Point
    offset: Fraction = ZERO

    def __post_init__(self) -> None:
        coeffs = tuple(Fraction(c) for c in self.coeffs)
        lead = _leading(coeffs)
        if not lead:
            raise ValueError("hyperplane coefficients are all zero")
        object.__setattr__(self, "coeffs", tuple(c / lead for c in coeffs))
        object.__setattr__(self, "offset", Fraction(self.offset) / lead)

    @classmethod
    def normalization(cls, d: int) -> Hyperplane:
        """The affine hull of normalized slices, sum(x) = 1."""
        return cls(tuple([ONE] * d), ONE)

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def evaluate(self, x: Sequence[Fraction]) -> Fraction:
        return dot(self.coeffs, x) - self.offset

    def contains(self, x: Sequence[Fraction]) -> bool:
        return self.evaluate(x) == 0

    def sides(self) -> tuple[Halfspace, Halfspace]:
        """The two closed halfspaces bounded by this hyperplane, positive side first."""
        return Halfspace(self.coeffs, self.offset), Halfspace(tuple(-c for c in self.coeffs), -self.offset)


@dataclass(frozen=True)
class Halfspace:
    """The set {x : coeffs . x >= offset}, scaled so the first nonzero coefficient is +-1."""

    coeffs: Point
    offset: Fraction = ZERO

    def __post_init__(self) -> None:
        coeffs = tuple(Fraction(c) for c in self.coeffs)
        lead = abs(_leading(coeffs))
        if not lead:
            raise ValueError("halfspace coefficients are all zero")
        object.__setattr__(self, "coeffs", tuple(c / lead for c in coeffs))
        object.__setattr__(self, "offset", Fraction(self.offset) / lead)

    @classmethod
    def nonnegative(cls, d: int, index: int) -> Halfspace:
        return cls(tuple(ONE if k == index else ZERO for k in range(d)), ZERO)

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    @property
    def boundary(self) -> Hyperplane:
        return Hyperplane(self.coeffs, self.offset)

    def slack(self, x: Sequence[Fraction]) -> Fraction:
        return dot(self.coeffs, x) - self.offset

    def contains(self, x: Sequence[Fraction]) -> bool:
        return self.slack(x) >= 0

    def flipped(self) -> Halfspace:
        return Halfspace(tuple(-c for c in self.coeffs), -self.offset)


# --- polytopes ---


@dataclass(frozen=True)
class Polytope:
    """An H-represented polytope in R^dim with a lazily enumerated vertex set."""

    dim: int
    equalities: tuple[Hyperplane, ...] = ()
    inequalities: tuple[Halfspace, ...] = ()

    @classmethod
    def simplex(cls, d: int) -> Polytope:
        """Normalized slices: x >= 0, sum(x) = 1."""
        return cls(d, (Hyperplane.normalization(d),), tuple(Halfspace.nonnegative(d, i) for i in range(d)))

    @classmethod
    def box(cls, d: int) -> Polytope:
        """The unit box [0, 1]^d."""
        lower = tuple(Halfspace.nonnegative(d, i) for i in range(d))
        upper = tuple(Halfspace(tuple(-ONE if k == i else ZERO for k in range(d)), -ONE) for i in range(d))
        return cls(d, (), lower + upper)

    def intersect(self, *halfspaces: Halfspace) -> Polytope:
        return Polytope(self.dim, self.equalities, self.inequalities + tuple(halfspaces))

    def restrict(self, *hyperplanes: Hyperplane) -> Polytope:
        return Polytope(self.dim, self.equalities + tuple(hyperplanes), self.inequalities)

    def contains(self, x: Sequence[Fraction]) -> bool:
        return all(e.contains(x) for e in self.equalities) and all(h.contains(x) for h in self.inequalities)

    def strictly_contains(self, x: Sequence[Fraction]) -> bool:
        """Equalities hold and every inequality has positive slack."""
        return all(e.contains(x) for e in self.equalities) and all(h.slack(x) > 0 for h in self.inequalities)

    @cached_property
    def vertices(self) -> tuple[Point, ...]:
        return _enumerate_vertices(self)

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def tight_rank(self, x: Sequence[Fraction]) -> int:
        """Rank of the normals of the constraints tight at ``x``."""
        normals = [e.coeffs for e in self.equalities]
        normals += [h.coeffs for h in self.inequalities if h.slack(x) == 0]
        return rank(normals)


def _independent_equalities(p: Polytope) -> list[Hyperplane]:
    kept: list[Hyperplane] = []
    for e in p.equalities:
        if rank([h.coeffs for h in (*kept, e)]) > len(kept):
            kept.append(e)
    return kept


def _enumerate_vertices(p: Polytope) -> tuple[Point, ...]:
    equalities = _independent_equalities(p)
    free = p.dim - len(equalities)
    boundaries = [h.boundary for h in p.inequalities]
    found: set[Point] = set()
    for subset in combinations(range(len(boundaries)), free):
        planes = equalities + [boundaries[i] for i in subset]
        solution = solve_square([h.coeffs for h in planes], [h.offset for h in planes])
        if solution is not None and p.contains(solution):
            found.add(solution)
    return tuple(sorted(found))


def enumerate_vertices(p: Polytope) -> tuple[Point, ...]:
    """Exact, deduplicated, lexicographically sorted vertex set of a bounded polytope."""
    return p.vertices


def minimal_h_representation(p: Polytope) -> Polytope:
    """Drop redundant inequalities one at a time, scanning in order."""
    if p.is_empty:
        raise EmptyPolytopeError("cannot reduce an empty polytope")
    kept = list(p.inequalities)
    i = 0
    while i < len(kept):
        if is_redundant(i, kept, p.equalities):
            del kept[i]
        else:
            i += 1
    return Polytope(p.dim, p.equalities, tuple(kept))


def relative_interior_point(p: Polytope) -> Point | None:
    """A point of ``p`` strictly inside every inequality within the hyperplane sum(x) = 1.

    Extra equalities are split into opposite inequalities, so any polytope of
    lower dimension has no such point.
    """
    normalization = Hyperplane.normalization(p.dim)
    halfspaces = list(p.inequalities)
    for e in p.equalities:
        if e != normalization:
            halfspaces.extend(e.sides())
    return interior_point(halfspaces, [normalization], dim=p.dim)


def is_full_dimensional(p: Polytope) -> bool:
    """True iff ``p`` has positive (d-1)-volume inside the normalized-slice hyperplane."""
    return relative_interior_point(p) is not None


def independent_vertices(p: Polytope) -> list[Point]:
    """The first d linearly independent vertices in lexicographic order."""
    chosen: list[Point] = []
    for v in p.vertices:
        if rank([*chosen, v]) > len(chosen):
            chosen.append(v)
        if len(chosen) == p.dim:
            return chosen
    raise DegenerateVertexSetError(f"only {len(chosen)} independent vertices, need {p.dim}")


def _practical_radius(p: Polytope, center: Point) -> Fraction:
    # Moving x_i by rho * y_i (i < d) and x_d by the negated sum changes
    # c . x by at most rho * sum_{i<d} |c_i - c_d|.
    d = p.dim
    bound: Fraction | None = None
    for h in p.inequalities:
        spread = sum((abs(h.coeffs[i] - h.coeffs[d - 1]) for i in range(d - 1)), ZERO)
        if not spread:
            continue
        candidate = h.slack(center) / (2 * spread)
        bound = candidate if bound is None else min(bound, candidate)
    return ONE if bound is None else min(ONE, dyadic_floor(bound))


def sample_int(
    p: Polytope,
    delta: Fraction,
    profile: ConstantProfile,
    rng: np.random.Generator,
    search_bits: int = 0,
) -> Point:
    """Draw a strictly interior normalized slice of a full-dimensional ``p``.

    The point is the centroid of d independent vertices displaced on a grid of
    (2M + 1)^(d-1) points with step rho / M. Any fixed hyperplane not through
    the centroid region holds at most a delta fraction of the grid.
    """
    d = p.dim
    vertices = independent_vertices(p)
    center = tuple(sum((v[i] for v in vertices), ZERO) / d for i in range(d))
    radius = profile.sample_radius(d, search_bits) if profile.is_theoretical else _practical_radius(p, center)
    grid = profile.grid_size(d, delta)
    steps = [int(k) for k in rng.integers(-grid, grid, size=d - 1, endpoint=True)]
    head = [center[i] + radius * Fraction(steps[i], grid) for i in range(d - 1)]
    point = (*head, ONE - sum(head, ZERO))
    if not p.strictly_contains(point):
        raise InvariantViolationError(f"sampled point {point} is not strictly interior")
    return point


def fit_homogeneous_hyperplane(points: Sequence[Sequence[Fraction]]) -> Hyperplane:
    """The canonical hyperplane through the origin and the given d - 1 independent points."""
    if not points:
        raise RankDeficientError("no points to fit")
    d = len(points[0])
    basis = nullspace(points, d)
    if len(basis) != 1:
        raise RankDeficientError(f"points span a space of rank {d - len(basis)}, need {d - 1}")
    return Hyperplane(basis[0], ZERO)


@dataclass(frozen=True)
class Cell:
    """A full-dimensional cell of a hyperplane arrangement inside a polytope."""

    signs: tuple[int, ...]
    polytope: Polytope
    point: Point


def enumerate_cells(hyperplanes: Sequence[Hyperplane], within: Polytope) -> list[Cell]:
    """All full-dimensional cells cut from ``within`` by ``hyperplanes``, in sign order (+ before -)."""
    start = relative_interior_point(within)
    if start is None:
        return []
    cells = [Cell((), within, start)]
    for h in hyperplanes:
        positive, negative = h.sides()
        refined = []
        for cell in cells:
            for sign, side in ((1, positive), (-1, negative)):
                piece = cell.polytope.intersect(side)
                point = relative_interior_point(piece)
                if point is not None:
                    refined.append(Cell((*cell.signs, sign), piece, point))
        cells = refined
    return cells


def check_vertex_bits(p: Polytope, bound: int) -> None:
    """Assert every vertex, written over a common denominator, fits in ``bound`` bits."""
    for v in p.vertices:
        den = common_denominator(v)
        bits = max(bitlen((c * den).numerator) for c in v) + bitlen(den)
        if bits > bound:
            logger.error("vertex bit bound violated", vertex=[str(c) for c in v], bits=bits, bound=bound)
            raise InvariantViolationError(f"vertex needs {bits} bits, bound is {bound}")
