"""Ascending price auction baseline.

A price rises from zero; every bidder whose stated value is at least the
price demands ``budget / price`` units. The clearing price ``v*`` is the
first price at which demand no longer exceeds the supply. Every allocated
unit sells at ``v*`` per unit, so the benchmark revenue is ``m * v*``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .mechanism import Outcome, _check_profile, _rank
from ._rat import to_fraction
from .model import BidProfile


@dataclass(frozen=True)
class ClockResult:
    clearing_price: Fraction
    marginal_index: int  # 1-based rank of the lowest-value allocated bidder
    partial: bool        # marginal bidder received less than her full demand
    outcome: Outcome
    r_star: Fraction


def clearing_price(profile: BidProfile, m: Fraction) -> ClockResult:
    """Exact clearing price and allocation of the ascending price auction.

    Scans value tiers in descending order with prefix budget sums ``B_l``.
    If ``B_l / m`` falls inside the tier's price interval the market clears
    in its interior at ``v* = B_l / m`` with all ``l`` winners fully
    spending; otherwise demand jumps across the supply at some bidder's
    value, that value is ``v*``, and the bidders at it are rationed in rank
    order at ``v*`` per unit.
    """
    _check_profile(profile)
    if m <= 0:
        raise ValueError("supply must be positive")
    ranked = _rank(profile)
    values = [to_fraction(v) for v in ranked.values]
    budgets = [to_fraction(b) for b in ranked.budgets]
    n = len(values)

    v_star = None
    prefix = Fraction(0)
    for l0 in range(n):
        prefix += budgets[l0]
        if prefix > m * values[l0]:
            v_star = values[l0]  # demand jumps across m at this value
            break
        v_next = values[l0 + 1] if l0 + 1 < n else Fraction(0)
        if prefix > m * v_next:
            v_star = prefix / m  # interior clearing inside this tier
            break
    if v_star is None:
        raise AssertionError("the dummy bidder guarantees a clearing price")

    remaining = Fraction(m)
    units = [Fraction(0)] * n
    pays = [Fraction(0)] * n
    marginal_rank0 = 0
    partial = False
    for i in range(n):
        if values[i] < v_star or remaining == 0:
            break
        demand = budgets[i] / v_star
        take = min(demand, remaining)
        if take > 0:
            units[i] = take
            pays[i] = take * v_star
            remaining -= take
            marginal_rank0 = i
            partial = take < demand
    if remaining != 0:
        raise AssertionError("clock allocation does not exhaust the supply")

    r_star = m * v_star
    inst = profile.instance
    units_orig = [Fraction(0)] * n
    pays_orig = [Fraction(0)] * n
    for rank, orig in enumerate(ranked.order):
        units_orig[orig] = units[rank]
        pays_orig[orig] = pays[rank]
    dummy_tier = r_star if v_star == inst.dummy_value else Fraction(0)
    outcome = Outcome(
        mode="divisible",
        supply=Fraction(m),
        bidder_ids=tuple(b.id for b in inst.bidders),
        stated_values=tuple(v for v, _ in profile.stated),
        stated_budgets=tuple(b for _, b in profile.stated),
        units=tuple(units_orig),
        payments=tuple(pays_orig),
        revenue=r_star,
        dummy_tier_payment=dummy_tier,
        cut=None,
    )
    return ClockResult(
        clearing_price=v_star,
        marginal_index=marginal_rank0 + 1,
        partial=partial,
        outcome=outcome,
        r_star=r_star,
    )


def apa_allocate(profile: BidProfile, m: Fraction) -> Outcome:
    """Allocation of the ascending price auction (see `clearing_price`)."""
    return clearing_price(profile, m).outcome
