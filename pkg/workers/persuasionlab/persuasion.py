"""Persuasion instances, signaling schemes and receiver best responses.

Also hosts the ground-truth oracles (optimal sender utility, true separating
hyperplanes, true best-response regions). The learner never calls those; they
exist for the harness and the tests.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING

from pydantic import BaseModel, ConfigDict, Field, model_validator

from persuasionlab.errors import EqualActionsError, InvalidSchemeError, UnknownSignalError, ZeroSliceError
from persuasionlab.exactnum import ONE, ZERO, RationalStr, bit_complexity, vector_bit_complexity
from persuasionlab.geometry import Halfspace, Hyperplane, Polytope
from persuasionlab.lp import Constraint, LinearProgram, Relation, solve

if TYPE_CHECKING:
    from collections.abc import Sequence

Slice = tuple[Fraction, ...]


class Instance(BaseModel):
    """A Bayesian persuasion instance with d states and n actions.

    Utility tables are indexed ``[state][action]``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: int = Field(ge=2)
    n: int = Field(ge=1)
    prior: tuple[RationalStr, ...]
    receiver_utility: tuple[tuple[RationalStr, ...], ...]
    sender_utility: tuple[tuple[RationalStr, ...], ...]
    allow_equivalent_actions: bool = False

    @model_validator(mode="after")
    def _check_invariants(self) -> Instance:
        if len(self.prior) != self.d:
            raise ValueError(f"prior has {len(self.prior)} entries, expected d={self.d}")
        for name in ("receiver_utility", "sender_utility"):
            table = getattr(self, name)
            if len(table) != self.d:
                raise ValueError(f"{name} has {len(table)} rows, expected d={self.d}")
            for theta, row in enumerate(table):
                if len(row) != self.n:
                    raise ValueError(f"{name}[{theta}] has {len(row)} entries, expected n={self.n}")
                for a, value in enumerate(row):
                    if not ZERO <= value <= ONE:
                        raise ValueError(f"{name}[{theta}][{a}] = {value} is outside [0, 1]")
        for theta, mass in enumerate(self.prior):
            if mass <= 0:
                raise ValueError(f"prior[{theta}] = {mass} is not positive")
        if sum(self.prior, ZERO) != ONE:
            raise ValueError(f"prior sums to {sum(self.prior, ZERO)}, expected 1")
        if not self.allow_equivalent_actions:
            seen: dict[tuple[Fraction, ...], int] = {}
            for a in range(self.n):
                column = tuple(row[a] for row in self.receiver_utility)
                if column in seen:
                    raise ValueError(f"actions {seen[column]} and {a} have identical receiver utilities")
                seen[column] = a
        return self

    @cached_property
    def receiver_weights(self) -> tuple[tuple[Fraction, ...], ...]:
        """mu_theta * u_theta(a)."""
        return tuple(tuple(m * u for u in row) for m, row in zip(self.prior, self.receiver_utility, strict=True))

    @cached_property
    def sender_weights(self) -> tuple[tuple[Fraction, ...], ...]:
        """mu_theta * u^s_theta(a)."""
        return tuple(tuple(m * u for u in row) for m, row in zip(self.prior, self.sender_utility, strict=True))

    @property
    def bit_bound(self) -> int:
        """B = B_mu + B_u."""
        utilities = [u for row in self.receiver_utility for u in row]
        return vector_bit_complexity(self.prior) + vector_bit_complexity(utilities)

    @property
    def product_bits(self) -> int:
        """Largest bit complexity among the products mu_theta * u_theta(a)."""
        return max(bit_complexity(w) for row in self.receiver_weights for w in row)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2, exclude_defaults=True)


def load_instance(path: Path | str) -> Instance:
    """Read and validate an instance file."""
    return Instance.model_validate_json(Path(path).read_text())


def save_instance(instance: Instance, path: Path | str) -> None:
    Path(path).write_text(instance.to_json() + "\n")


@dataclass(frozen=True)
class SignalingScheme:
    """Per-state distributions over a list of signal labels, ``table[state][signal]``."""

    signals: tuple[str, ...]
    table: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        table = tuple(tuple(Fraction(p) for p in row) for row in self.table)
        object.__setattr__(self, "signals", tuple(self.signals))
        object.__setattr__(self, "table", table)
        if len(set(self.signals)) != len(self.signals):
            raise InvalidSchemeError("signal labels must be unique")
        for theta, row in enumerate(table):
            if len(row) != len(self.signals):
                raise InvalidSchemeError(f"row {theta} has {len(row)} entries for {len(self.signals)} signals")
            if any(p < 0 for p in row):
                raise InvalidSchemeError(f"row {theta} has a negative probability")
            if sum(row, ZERO) != ONE:
                raise InvalidSchemeError(f"row {theta} sums to {sum(row, ZERO)}")

    @classmethod
    def uninformative(cls, d: int) -> SignalingScheme:
        return cls(("s",), tuple((ONE,) for _ in range(d)))

    @classmethod
    def full_revelation(cls, d: int) -> SignalingScheme:
        return cls(
            tuple(f"s{theta}" for theta in range(d)),
            tuple(tuple(ONE if k == theta else ZERO for k in range(d)) for theta in range(d)),
        )

    @classmethod
    def two_signal(cls, x: Sequence[Fraction]) -> SignalingScheme:
        """Signal s1 with probability x_theta, s2 otherwise."""
        return cls(("s1", "s2"), tuple((Fraction(p), ONE - p) for p in x))

    @classmethod
    def from_slices(cls, signals: Sequence[str], slices: Sequence[Sequence[Fraction]]) -> SignalingScheme:
        """Build a scheme whose signal ``signals[k]`` has slice ``slices[k]``."""
        d = len(slices[0])
        return cls(tuple(signals), tuple(tuple(s[theta] for s in slices) for theta in range(d)))

    @property
    def num_states(self) -> int:
        return len(self.table)

    def index(self, signal: str) -> int:
        try:
            return self.signals.index(signal)
        except ValueError:
            raise UnknownSignalError(signal) from None

    def column(self, k: int) -> Slice:
        return tuple(row[k] for row in self.table)


def slice_of(scheme: SignalingScheme, signal: str) -> Slice:
    """The slice (phi_theta(s))_theta of ``signal``."""
    return scheme.column(scheme.index(signal))


def _receiver_scores(instance: Instance, x: Sequence[Fraction]) -> list[Fraction]:
    if len(x) != instance.d:
        raise ValueError(f"slice has {len(x)} entries, instance has d={instance.d}")
    if not any(x):
        raise ZeroSliceError("the all-zero slice induces no posterior")
    weights = instance.receiver_weights
    return [sum((x[t] * weights[t][a] for t in range(instance.d) if x[t]), ZERO) for a in range(instance.n)]


def best_response_set(instance: Instance, x: Sequence[Fraction]) -> tuple[int, ...]:
    """Actions maximizing the receiver's (unnormalized) expected utility under slice ``x``."""
    scores = _receiver_scores(instance, x)
    best = max(scores)
    return tuple(a for a, s in enumerate(scores) if s == best)


def sender_score(instance: Instance, x: Sequence[Fraction], action: int) -> Fraction:
    """sum_theta mu_theta x_theta u^s_theta(action)."""
    weights = instance.sender_weights
    return sum((x[t] * weights[t][action] for t in range(instance.d) if x[t]), ZERO)


def chosen_action(instance: Instance, x: Sequence[Fraction]) -> int:
    """The best response the receiver plays: sender-favorable, then lowest index."""
    candidates = best_response_set(instance, x)
    if len(candidates) == 1:
        return candidates[0]
    return max(candidates, key=lambda a: (sender_score(instance, x, a), -a))


def sender_expected_utility(instance: Instance, scheme: SignalingScheme) -> Fraction:
    """Exact expected sender utility of committing to ``scheme``."""
    total = ZERO
    for k in range(len(scheme.signals)):
        x = scheme.column(k)
        if any(x):
            total += sender_score(instance, x, chosen_action(instance, x))
    return total


def compute_opt(instance: Instance) -> tuple[Fraction, SignalingScheme]:
    """Optimal sender utility and a direct persuasive witness scheme."""
    d, n = instance.d, instance.n
    weights = instance.receiver_weights

    def var(theta: int, a: int) -> int:
        return theta * n + a

    rows = []
    for a in range(n):
        for other in range(n):
            if other == a:
                continue
            coeffs = [ZERO] * (d * n)
            for theta in range(d):
                coeffs[var(theta, a)] = weights[theta][a] - weights[theta][other]
            if any(coeffs):
                rows.append(Constraint(tuple(coeffs), Relation.GE, ZERO))
    for theta in range(d):
        coeffs = [ZERO] * (d * n)
        for a in range(n):
            coeffs[var(theta, a)] = ONE
        rows.append(Constraint(tuple(coeffs), Relation.EQ, ONE))

    objective = tuple(instance.sender_weights[theta][a] for theta in range(d) for a in range(n))
    solution = solve(LinearProgram(objective=objective, rows=tuple(rows)))
    assert solution.point is not None and solution.value is not None
    table = tuple(tuple(solution.point[var(theta, a)] for a in range(n)) for theta in range(d))
    return solution.value, SignalingScheme(tuple(f"a{a}" for a in range(n)), table)


def separating_halfspace(instance: Instance, i: int, j: int) -> Halfspace:
    """Slices under which action ``i`` is weakly better than ``j`` for the receiver."""
    if i == j:
        raise EqualActionsError(f"action {i} compared with itself")
    coeffs = tuple(row[i] - row[j] for row in instance.receiver_weights)
    if not any(coeffs):
        raise EqualActionsError(f"actions {i} and {j} are equivalent for the receiver")
    return Halfspace(coeffs, ZERO)


def true_separating_hyperplane(instance: Instance, i: int, j: int) -> Hyperplane:
    """Canonical H_ij with coefficients mu_theta (u_theta(a_i) - u_theta(a_j))."""
    return separating_halfspace(instance, i, j).boundary


def true_hyperplanes(instance: Instance) -> set[Hyperplane]:
    """Every distinct separating hyperplane of the instance."""
    planes = set()
    for i in range(instance.n):
        for j in range(i + 1, instance.n):
            try:
                planes.add(true_separating_hyperplane(instance, i, j))
            except EqualActionsError:
                continue
    return planes


def best_response_region(instance: Instance, action: int, within: Polytope) -> Polytope:
    """``within`` cut by every separating halfspace of ``action``."""
    cuts = []
    for other in range(instance.n):
        if other == action:
            continue
        try:
            cuts.append(separating_halfspace(instance, action, other))
        except EqualActionsError:
            continue
    return within.intersect(*cuts)


def posterior_form(instance: Instance, scheme: SignalingScheme) -> dict[tuple[Fraction, ...], Fraction]:
    """Distribution over the posteriors induced by ``scheme``."""
    weights: dict[tuple[Fraction, ...], Fraction] = defaultdict(lambda: ZERO)
    for k in range(len(scheme.signals)):
        joint = [m * x for m, x in zip(instance.prior, scheme.column(k), strict=True)]
        mass = sum(joint, ZERO)
        if not mass:
            continue
        weights[tuple(j / mass for j in joint)] += mass
    return dict(weights)
