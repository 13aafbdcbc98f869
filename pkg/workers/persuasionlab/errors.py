"""Exception hierarchy and trial abort reasons."""

from __future__ import annotations

from enum import StrEnum


class AbortReason(StrEnum):
    """Why a trial stopped before reaching its horizon."""

    BUDGET_EXHAUSTED = "budget_exhausted"
    EMPTY_THETA_TILDE = "empty_theta_tilde"
    RANK_DEFICIENT = "rank_deficient"
    NO_RATIONAL_WITHIN_DEPTH = "no_rational_within_depth"
    DEGENERATE_VERTEX_SET = "degenerate_vertex_set"
    HYPERPLANE_MISMATCH = "hyperplane_mismatch"
    REGION_REVISITED = "region_revisited"
    FACE_NOT_FOUND = "face_not_found"


class PersuasionLabError(Exception):
    """Base class for every error raised by persuasionlab."""


class TrialAbortedError(PersuasionLabError):
    """A clean-event assumption failed; the trial stops with a typed reason."""

    def __init__(self, reason: AbortReason, detail: str = "") -> None:
        super().__init__(f"{reason}: {detail}" if detail else str(reason))
        self.reason = reason
        self.detail = detail


# --- model ---


class ZeroSliceError(PersuasionLabError, ValueError):
    """The all-zero slice has no posterior and no best response."""


class UnknownSignalError(PersuasionLabError, KeyError):
    """The signal is not part of the scheme."""


class EqualActionsError(PersuasionLabError, ValueError):
    """A separating hyperplane was requested for identical or equivalent actions."""


class InvalidSchemeError(PersuasionLabError, ValueError):
    """A signaling scheme table is not a per-state probability distribution."""


# --- environment ---


class NoObservationsError(PersuasionLabError):
    """The prior cannot be estimated before the first round."""


class ModeViolationError(PersuasionLabError):
    """Direct action queries are only available in direct oracle mode."""


class HorizonReachedError(PersuasionLabError):
    """The environment refuses to play past its horizon."""


# --- exact arithmetic and geometry ---


class NoRationalWithinDepthError(PersuasionLabError):
    """No rational of bounded Stern-Brocot depth lies in the interval."""


class EmptyPolytopeError(PersuasionLabError, ValueError):
    """The polytope has no points."""


class RankDeficientError(PersuasionLabError):
    """The given points do not span a hyperplane."""


class DegenerateVertexSetError(PersuasionLabError):
    """The polytope has fewer than d linearly independent vertices."""


class MembershipViolationError(PersuasionLabError, ValueError):
    """A point lies outside the region it was supposed to belong to."""


class InvariantViolationError(PersuasionLabError, AssertionError):
    """An internal invariant checked by substitution does not hold."""


# --- generators ---


class GenerationExhaustedError(PersuasionLabError):
    """Random instance generation kept producing invalid instances."""
