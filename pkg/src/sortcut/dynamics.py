"""Repeated-game simulator: every bidder plays a three-rule greedy bid
adjustment, one activation at a time in round-robin order.

Budgets stay truthful throughout (budget lies are dominated); only stated
values move, in steps of a fixed increment, never below the dummy value.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .mechanism import Outcome, allocate_divisible
from .model import DUMMY_ID, BidProfile, Instance


@dataclass(frozen=True)
class DynamicsConfig:
    step: Fraction
    max_rounds: int = 100_000  # total activations, not full sweeps
    record_every: int = 1_000

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


@dataclass(frozen=True)
class TracePoint:
    activation: int
    stated_values: tuple[Fraction, ...]
    outcome: Outcome


@dataclass(frozen=True)
class DynamicsTrace:
    points: tuple[TracePoint, ...]
    converged: bool
    rounds_used: int  # activations consumed
    final_profile: BidProfile
    final_outcome: Outcome


def _sort_rank(profile: BidProfile, index: int):
    value, budget = profile.stated[index]
    return (-value, -budget, profile.instance.bidders[index].id)


def _has_rival_above(profile: BidProfile, index: int) -> bool:
    mine = _sort_rank(profile, index)
    for j, bidder in enumerate(profile.instance.bidders):
        if j != index and bidder.id != DUMMY_ID and _sort_rank(profile, j) < mine:
            return True
    return False


def _decide(
    profile: BidProfile, outcome: Outcome, index: int, m: Fraction, step: Fraction
) -> Fraction | None:
    """New stated value for the scheduled bidder, or None to hold.

    Rules, in order: lower the bid when the average price paid exceeds the
    true per-unit value; raise it when budget is left unspent and somebody
    ranks above (a one-step lookahead vetoes raises that would turn into
    overpaying); otherwise hold.
    """
    instance = profile.instance
    true_value = instance.bidders[index].value
    bid, budget = profile.stated[index]
    units = outcome.units[index]
    paid = outcome.payments[index]

    if units > 0 and paid > units * true_value:
        floored = max(bid - step, instance.dummy_value)
        return floored if floored != bid else None

    if paid < budget and _has_rival_above(profile, index):
        candidate = bid + step
        trial_outcome = allocate_divisible(profile.with_bid(index, value=candidate), m)
        t_units = trial_outcome.units[index]
        if t_units > 0 and trial_outcome.payments[index] >= t_units * true_value:
            # the ceiling: she would win only at or above her own value,
            # gaining nothing (break-even raises just feed a limit cycle)
            return None
        return candidate

    return None


def greedy_step(
    profile: BidProfile, m: Fraction, config: DynamicsConfig, bidder: int
) -> BidProfile:
    """One activation: the scheduled bidder applies the first matching rule."""
    if profile.instance.bidders[bidder].id == DUMMY_ID:
        raise ValueError("the dummy bidder never adjusts its bid")
    outcome = allocate_divisible(profile, m)
    new_bid = _decide(profile, outcome, bidder, m, config.step)
    if new_bid is None:
        return profile
    return profile.with_bid(bidder, value=new_bid)


def run_dynamics(
    instance: Instance,
    m: Fraction,
    config: DynamicsConfig,
    initial: BidProfile | None = None,
) -> DynamicsTrace:
    """Iterate activations round-robin until a full quiescent sweep or the
    activation budget runs out. Non-convergence is a reported status."""
    profile = initial if initial is not None else BidProfile.truthful(instance)
    if profile.instance is not instance and profile.instance != instance:
        raise ValueError("initial profile must belong to the instance")
    real = [i for i, b in enumerate(instance.bidders) if b.id != DUMMY_ID]

    points: list[TracePoint] = []
    outcome = allocate_divisible(profile, m)
    points.append(TracePoint(0, tuple(v for v, _ in profile.stated), outcome))

    quiet = 0
    activation = 0
    converged = False
    while activation < config.max_rounds:
        bidder = real[activation % len(real)]
        new_bid = _decide(profile, outcome, bidder, m, config.step)
        activation += 1
        if new_bid is None:
            quiet += 1
        else:
            quiet = 0
            profile = profile.with_bid(bidder, value=new_bid)
            outcome = allocate_divisible(profile, m)
        if activation % config.record_every == 0:
            points.append(
                TracePoint(activation, tuple(v for v, _ in profile.stated), outcome)
            )
        if quiet >= len(real):
            converged = True
            break

    if points[-1].activation != activation:
        points.append(
            TracePoint(activation, tuple(v for v, _ in profile.stated), outcome)
        )
    return DynamicsTrace(
        points=tuple(points),
        converged=converged,
        rounds_used=activation,
        final_profile=profile,
        final_outcome=outcome,
    )
