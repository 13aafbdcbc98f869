"""Exact rational linear programming.

A dense two-phase simplex over ``Fraction`` with Bland's rule. Programs are
maximizations; variables default to ``x >= 0``. Free variables are split into
differences of nonnegative columns, finite upper bounds become rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from typing import TYPE_CHECKING, Protocol

from persuasionlab.exactnum import ZERO, dot

if TYPE_CHECKING:
    from collections.abc import Sequence


class Relation(StrEnum):
    """Row relation between ``coeffs . x`` and ``rhs``."""

    LE = "<="
    EQ = "="
    GE = ">="

    def flipped(self) -> Relation:
        return {Relation.LE: Relation.GE, Relation.GE: Relation.LE, Relation.EQ: Relation.EQ}[self]


class LpStatus(StrEnum):
    """Outcome of a solve."""

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LinearForm(Protocol):
    """Anything with ``coeffs`` and ``offset``, such as halfspaces and hyperplanes."""

    @property
    def coeffs(self) -> tuple[Fraction, ...]: ...

    @property
    def offset(self) -> Fraction: ...


@dataclass(frozen=True)
class Constraint:
    """A single row ``coeffs . x  <relation>  rhs``."""

    coeffs: tuple[Fraction, ...]
    relation: Relation
    rhs: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))
        object.__setattr__(self, "rhs", Fraction(self.rhs))

    def holds(self, x: Sequence[Fraction]) -> bool:
        lhs = dot(self.coeffs, x)
        if self.relation is Relation.LE:
            return lhs <= self.rhs
        if self.relation is Relation.GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class LinearProgram:
    """Maximize ``objective . x`` subject to ``rows`` and per-variable bounds.

    ``lower=None`` means every variable is nonnegative; a ``None`` entry inside
    ``lower`` or ``upper`` means that side is unbounded.
    """

    objective: tuple[Fraction, ...]
    rows: tuple[Constraint, ...] = ()
    lower: tuple[Fraction | None, ...] | None = None
    upper: tuple[Fraction | None, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.objective)
        object.__setattr__(self, "objective", tuple(Fraction(c) for c in self.objective))
        object.__setattr__(self, "rows", tuple(self.rows))
        for row in self.rows:
            if len(row.coeffs) != n:
                raise ValueError(f"row has {len(row.coeffs)} coefficients, program has {n} variables")
        for name in ("lower", "upper"):
            bounds = getattr(self, name)
            if bounds is None:
                continue
            if len(bounds) != n:
                raise ValueError(f"{name} bounds have length {len(bounds)}, expected {n}")
            object.__setattr__(self, name, tuple(None if b is None else Fraction(b) for b in bounds))

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def lower_bound(self, j: int) -> Fraction | None:
        return ZERO if self.lower is None else self.lower[j]

    def upper_bound(self, j: int) -> Fraction | None:
        return None if self.upper is None else self.upper[j]


@dataclass(frozen=True)
class LpSolution:
    """Solve result. ``duals`` holds one multiplier per row of the program."""

    status: LpStatus
    point: tuple[Fraction, ...] | None = None
    value: Fraction | None = None
    duals: tuple[Fraction, ...] | None = field(default=None, compare=False)

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Canonical-form tableau ``T x = rhs`` with an explicit basis."""

    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int], barred: set[int]) -> None:
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.barred = barred  # columns never allowed to enter (artificials)
        self.width = len(rows[0]) if rows else 0

    def pivot(self, r: int, c: int) -> None:
        row = self.rows[r]
        p = row[c]
        if p != 1:
            for j in range(self.width):
                if row[j]:
                    row[j] /= p
            self.rhs[r] /= p
        nonzero = [j for j in range(self.width) if row[j]]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            factor = other[c]
            if not factor:
                continue
            for j in nonzero:
                other[j] -= factor * row[j]
            self.rhs[i] -= factor * self.rhs[r]
        self.basis[r] = c

    def reduced_costs(self, costs: list[Fraction]) -> list[Fraction]:
        reduced = list(costs)
        for r, b in enumerate(self.basis):
            cb = costs[b]
            if not cb:
                continue
            for j, a in enumerate(self.rows[r]):
                if a:
                    reduced[j] -= cb * a
        return reduced

    def maximize(self, costs: list[Fraction]) -> bool:
        """Run Bland's rule to optimality. Returns False when unbounded."""
        reduced = self.reduced_costs(costs)
        while True:
            entering = next(
                (j for j in range(self.width) if reduced[j] > 0 and j not in self.barred),
                None,
            )
            if entering is None:
                return True
            leaving = None
            best: Fraction | None = None
            for r, row in enumerate(self.rows):
                a = row[entering]
                if a <= 0:
                    continue
                ratio = self.rhs[r] / a
                if best is None or ratio < best or (ratio == best and self.basis[r] < self.basis[leaving]):
                    best, leaving = ratio, r
            if leaving is None:
                return False
            self.pivot(leaving, entering)
            factor = reduced[entering]
            row = self.rows[leaving]
            for j in range(self.width):
                if row[j]:
                    reduced[j] -= factor * row[j]

    def objective_value(self, costs: list[Fraction]) -> Fraction:
        return sum((costs[b] * self.rhs[r] for r, b in enumerate(self.basis)), ZERO)


def solve(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` exactly. Deterministic for a given row and column order."""
    # Column encoding: x_j = shift_j + sum(sign * y_col)
    encodings: list[list[tuple[int, int]]] = []
    shifts: list[Fraction] = []
    extra_rows: list[Constraint] = []
    ncols = 0
    for j in range(lp.num_vars):
        low, high = lp.lower_bound(j), lp.upper_bound(j)
        if low is not None:
            shifts.append(low)
            encodings.append([(ncols, 1)])
            ncols += 1
            if high is not None:
                unit = tuple(Fraction(int(k == j)) for k in range(lp.num_vars))
                extra_rows.append(Constraint(unit, Relation.LE, high))
        elif high is not None:
            shifts.append(high)
            encodings.append([(ncols, -1)])
            ncols += 1
        else:
            shifts.append(ZERO)
            encodings.append([(ncols, 1), (ncols + 1, -1)])
            ncols += 2

    all_rows = list(lp.rows) + extra_rows
    structural: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    relations: list[Relation] = []
    signs: list[int] = []
    for row in all_rows:
        coeffs = [ZERO] * ncols
        for j, a in enumerate(row.coeffs):
            if a:
                for col, sign in encodings[j]:
                    coeffs[col] += sign * a
        b = row.rhs - dot(row.coeffs, shifts)
        relation = row.relation
        sign = 1
        if b < 0:
            coeffs = [-a for a in coeffs]
            b = -b
            relation = relation.flipped()
            sign = -1
        structural.append(coeffs)
        rhs.append(b)
        relations.append(relation)
        signs.append(sign)

    m = len(all_rows)
    n_slack = sum(1 for rel in relations if rel is not Relation.EQ)
    n_art = sum(1 for rel in relations if rel is not Relation.LE)
    width = ncols + n_slack + n_art
    rows = [[ZERO] * width for _ in range(m)]
    basis: list[int] = []
    identity: list[int] = []
    artificial: set[int] = set()
    next_slack, next_art = ncols, ncols + n_slack
    for i in range(m):
        rows[i][:ncols] = structural[i]
        if relations[i] is Relation.LE:
            rows[i][next_slack] = Fraction(1)
            basis.append(next_slack)
            identity.append(next_slack)
            next_slack += 1
            continue
        if relations[i] is Relation.GE:
            rows[i][next_slack] = Fraction(-1)
            next_slack += 1
        rows[i][next_art] = Fraction(1)
        basis.append(next_art)
        identity.append(next_art)
        artificial.add(next_art)
        next_art += 1

    tableau = _Tableau(rows, rhs, basis, barred=artificial)

    if artificial:
        phase_one = [Fraction(-1) if j in artificial else ZERO for j in range(width)]
        tableau.maximize(phase_one)
        if tableau.objective_value(phase_one) < 0:
            return LpSolution(status=LpStatus.INFEASIBLE)
        for r in range(m):
            if tableau.basis[r] not in artificial:
                continue
            col = next((j for j in range(width) if j not in artificial and tableau.rows[r][j]), None)
            if col is not None:
                tableau.pivot(r, col)
            # otherwise the row is redundant; its artificial stays basic at zero

    costs = [ZERO] * width
    for j, c in enumerate(lp.objective):
        for col, sign in encodings[j]:
            costs[col] += sign * c
    if not tableau.maximize(costs):
        return LpSolution(status=LpStatus.UNBOUNDED)

    values = [ZERO] * width
    for r, b in enumerate(tableau.basis):
        values[b] = tableau.rhs[r]
    point = tuple(
        shifts[j] + sum((sign * values[col] for col, sign in encodings[j]), ZERO) for j in range(lp.num_vars)
    )
    duals = tuple(
        signs[i] * sum((costs[b] * tableau.rows[r][identity[i]] for r, b in enumerate(tableau.basis)), ZERO)
        for i in range(len(lp.rows))
    )
    return LpSolution(status=LpStatus.OPTIMAL, point=point, value=dot(lp.objective, point), duals=duals)


def interior_point(
    halfspaces: Sequence[LinearForm],
    equalities: Sequence[LinearForm] = (),
    dim: int | None = None,
) -> tuple[Fraction, ...] | None:
    """Return a point with maximal uniform slack on every halfspace, if that slack is positive.

    Variables live in the box [-2, 2]^d and the slack is capped at 1, so the
    program is always bounded.
    """
    forms = list(halfspaces) + list(equalities)
    if dim is None:
        if not forms:
            raise ValueError("dimension is required when no constraints are given")
        dim = len(forms[0].coeffs)
    rows = [Constraint((*h.coeffs, Fraction(-1)), Relation.GE, h.offset) for h in halfspaces]
    rows += [Constraint((*e.coeffs, ZERO), Relation.EQ, e.offset) for e in equalities]
    program = LinearProgram(
        objective=(*([ZERO] * dim), Fraction(1)),
        rows=tuple(rows),
        lower=(*([Fraction(-2)] * dim), None),
        upper=(*([Fraction(2)] * dim), Fraction(1)),
    )
    solution = solve(program)
    if not solution.is_optimal or solution.value is None or solution.value <= 0:
        return None
    assert solution.point is not None
    return solution.point[:dim]


def is_feasible(halfspaces: Sequence[LinearForm], equalities: Sequence[LinearForm] = (), dim: int | None = None) -> bool:
    """True iff the constraints have a common solution."""
    forms = list(halfspaces) + list(equalities)
    if not forms:
        return True
    dim = dim or len(forms[0].coeffs)
    rows = [Constraint(h.coeffs, Relation.GE, h.offset) for h in halfspaces]
    rows += [Constraint(e.coeffs, Relation.EQ, e.offset) for e in equalities]
    program = LinearProgram(objective=tuple([ZERO] * dim), rows=tuple(rows), lower=tuple([None] * dim))
    return solve(program).status is not LpStatus.INFEASIBLE


def is_redundant(row_index: int, halfspaces: Sequence[LinearForm], equalities: Sequence[LinearForm] = ()) -> bool:
    """True iff dropping ``halfspaces[row_index]`` leaves the feasible set unchanged.

    Minimizes the dropped row's left-hand side over the remaining rows, with a
    floor one unit below its offset to keep the program bounded.
    """
    target = halfspaces[row_index]
    rest = [h for i, h in enumerate(halfspaces) if i != row_index]
    dim = len(target.coeffs)
    rows = [Constraint(h.coeffs, Relation.GE, h.offset) for h in rest]
    rows += [Constraint(e.coeffs, Relation.EQ, e.offset) for e in equalities]
    rows.append(Constraint(target.coeffs, Relation.GE, target.offset - 1))
    program = LinearProgram(
        objective=tuple(-c for c in target.coeffs),
        rows=tuple(rows),
        lower=tuple([None] * dim),
    )
    solution = solve(program)
    if solution.status is LpStatus.INFEASIBLE:
        return not is_feasible(rest, equalities, dim)
    assert solution.value is not None
    return -solution.value >= target.offset
