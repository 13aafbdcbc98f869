"""PAC variants: learn a gamma-optimal scheme with probability at least 1 - eta."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import structlog

from persuasionlab.errors import AbortReason, TrialAbortedError
from persuasionlab.exactnum import ONE
from persuasionlab.learner import build_search_space
from persuasionlab.oracle import ActionOracle
from persuasionlab.regions import SearchSpace, find_polytopes
from persuasionlab.signaling import compute_signaling

if TYPE_CHECKING:
    from collections.abc import Sequence

    import numpy as np

    from persuasionlab.environment import SenderChannel
    from persuasionlab.models import LearnerConfig
    from persuasionlab.persuasion import SignalingScheme
    from persuasionlab.regions import RegionCollection

logger = structlog.get_logger()


@dataclass(frozen=True)
class PacConfig:
    """Accuracy gamma and confidence eta, both in (0, 1)."""

    gamma: Fraction
    eta: Fraction

    def __post_init__(self) -> None:
        for name in ("gamma", "eta"):
            value = Fraction(getattr(self, name))
            if not 0 < value < 1:
                raise ValueError(f"{name} {value} must lie in (0, 1)")
            object.__setattr__(self, name, value)

    @property
    def delta(self) -> Fraction:
        return self.eta / 2

    @property
    def zeta(self) -> Fraction:
        return self.eta / 2

    def eps1(self, d: int, n: int, *, known_prior: bool = False) -> Fraction:
        """gamma / (12 n d), or gamma / (10 n d) when the prior is known."""
        return self.gamma / ((10 if known_prior else 12) * n * d)


def compute_threshold(eps1: Fraction) -> Fraction:
    """Halve from 1 while the value is still at least ``eps1``.

    A power-of-two ``eps1`` is halved once more: 1/4 maps to 1/8.
    """
    eps1 = Fraction(eps1)
    if not 0 < eps1 < 1:
        raise ValueError(f"eps1 {eps1} must lie in (0, 1)")
    eps = ONE
    while eps >= eps1:
        eps /= 2
    return eps


def pac_phase1_rounds(epsilon: Fraction, d: int, delta: Fraction) -> int:
    """ceil(1/(2 eps^2) * ln(2d/delta))."""
    return math.ceil(1 / (2 * epsilon**2) * math.log(2 * d / delta))


@dataclass(frozen=True)
class PacOutcome:
    """Result of a PAC run; ``scheme`` is None when the run aborted."""

    scheme: SignalingScheme | None
    rounds_used: int
    epsilon: Fraction
    space: SearchSpace | None = None
    regions: RegionCollection | None = None
    abort_reason: AbortReason | None = None
    abort_detail: str = ""

    @property
    def aborted(self) -> bool:
        return self.abort_reason is not None


def _learn_scheme(
    channel: SenderChannel,
    space: SearchSpace,
    zeta: Fraction,
    mu: Sequence[Fraction],
    config: LearnerConfig,
    rng: np.random.Generator,
) -> tuple[SignalingScheme, RegionCollection]:
    d, n = channel.num_states, channel.num_actions
    profile = config.profile
    budget = config.oracle_budget or profile.oracle_budget(space.epsilon, zeta, d, n)
    oracle = ActionOracle(channel, budget)
    regions = find_polytopes(oracle, space, zeta, profile, rng, n)
    return compute_signaling(regions, space, mu, channel.sender_utility), regions


def run_pac(
    channel: SenderChannel,
    cfg: PacConfig,
    config: LearnerConfig,
    rng: np.random.Generator,
) -> PacOutcome:
    """Estimate the prior, learn the regions, then solve the signaling program once."""
    d, n = channel.num_states, channel.num_actions
    epsilon = config.epsilon or compute_threshold(cfg.eps1(d, n))
    t1 = pac_phase1_rounds(epsilon, d, cfg.delta)
    log = logger.bind(gamma=str(cfg.gamma), eta=str(cfg.eta), epsilon=str(epsilon), t1=t1)
    start = channel.t
    space: SearchSpace | None = None
    try:
        space = build_search_space(channel, t1, epsilon)
        scheme, regions = _learn_scheme(channel, space, cfg.zeta, space.mu_hat, config, rng)
    except TrialAbortedError as exc:
        log.warning("trial aborted", abort_reason=exc.reason, detail=exc.detail)
        return PacOutcome(None, channel.t - start, epsilon, space, abort_reason=exc.reason, abort_detail=exc.detail)
    log.info("pac run finished", rounds_used=channel.t - start)
    return PacOutcome(scheme, channel.t - start, epsilon, space, regions)


def run_pac_known_prior(
    channel: SenderChannel,
    prior: Sequence[Fraction],
    cfg: PacConfig,
    config: LearnerConfig,
    rng: np.random.Generator,
) -> PacOutcome:
    """Skip prior estimation: build X_eps from ``prior`` and spend rounds only on region learning."""
    d, n = channel.num_states, channel.num_actions
    prior = tuple(Fraction(m) for m in prior)
    epsilon = config.epsilon or compute_threshold(cfg.eps1(d, n, known_prior=True))
    log = logger.bind(gamma=str(cfg.gamma), eta=str(cfg.eta), epsilon=str(epsilon))
    start = channel.t
    space: SearchSpace | None = None
    try:
        space = SearchSpace.from_prior(prior, epsilon)
        scheme, regions = _learn_scheme(channel, space, cfg.eta, prior, config, rng)
    except TrialAbortedError as exc:
        log.warning("trial aborted", abort_reason=exc.reason, detail=exc.detail)
        return PacOutcome(None, channel.t - start, epsilon, space, abort_reason=exc.reason, abort_detail=exc.detail)
    log.info("pac run finished", rounds_used=channel.t - start)
    return PacOutcome(scheme, channel.t - start, epsilon, space, regions)
