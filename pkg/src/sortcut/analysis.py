"""Property checkers and falsification harnesses: Pareto certificates, the
revenue benchmark gap, brute-force deviation search, and equilibrium checks.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

from .clock import clearing_price
from .mechanism import (
    NoClearingError,
    Outcome,
    allocate_divisible,
    bidder_allocation,
)
from .model import DUMMY_ID, BidProfile, Instance, is_normalized


def _allocation_or_rejection(
    profile: BidProfile, m: Fraction, index: int
) -> tuple[Fraction, Fraction]:
    """Deviations can drain so much stated money that nothing clears; the
    auctioneer rejects such profiles, leaving the bidder empty-handed."""
    try:
        return bidder_allocation(profile, m, index)
    except NoClearingError:
        return Fraction(0), Fraction(0)


@functools.total_ordering
class _MinusInfinity:
    """Bottom element of the utility order: a payment above the true budget
    is unacceptable no matter how many units come with it."""

    def __lt__(self, other) -> bool:
        return not isinstance(other, _MinusInfinity)

    def __eq__(self, other) -> bool:
        return isinstance(other, _MinusInfinity)

    def __hash__(self) -> int:
        return hash("_MinusInfinity")

    def __repr__(self) -> str:
        return "-inf"


#: Utility of a bidder exposed to paying more than her true budget.
BOTTOM = _MinusInfinity()

Utility = Fraction | _MinusInfinity


@dataclass(frozen=True)
class ParetoReport:
    """Verdict plus a re-checkable witness when the verdict is negative.

    Witness forms: ``("unsold", amount)`` when supply is withheld, or
    ``("budget-slack", j, i)`` when bidder ``i`` (instance index) is
    allocated while the higher-valued bidder ``j`` retains usable budget.
    """

    is_pareto: bool
    witness: tuple | None = None


@dataclass(frozen=True)
class DeviationReport:
    bidder: int
    best_deviation: tuple[Fraction, Fraction]
    utility_truthful: Utility
    utility_best: Utility
    gain: Fraction
    deviation_class: str


def is_pareto_divisible(profile: BidProfile, outcome: Outcome) -> ParetoReport:
    """All units sold, and nobody is allocated while a higher-valued bidder
    has not exhausted her stated budget."""
    sold = outcome.total_units()
    if sold != outcome.supply:
        return ParetoReport(False, ("unsold", outcome.supply - sold))
    values = outcome.stated_values
    n = len(values)
    for i in range(n):
        if outcome.units[i] <= 0:
            continue
        for j in range(n):
            if values[j] > values[i] and outcome.payments[j] != outcome.stated_budgets[j]:
                return ParetoReport(False, ("budget-slack", j, i))
    return ParetoReport(True)


def is_pareto_indivisible(profile: BidProfile, outcome: Outcome) -> ParetoReport:
    """Whole-unit variant: a higher-valued bidder may retain budget, but not
    enough to buy one more unit at an allocated bidder's value."""
    sold = outcome.total_units()
    if sold != outcome.supply:
        return ParetoReport(False, ("unsold", outcome.supply - sold))
    values = outcome.stated_values
    n = len(values)
    for i in range(n):
        if outcome.units[i] <= 0:
            continue
        for j in range(n):
            if values[j] > values[i]:
                slack = outcome.stated_budgets[j] - outcome.payments[j]
                if slack >= values[i]:
                    return ParetoReport(False, ("budget-slack", j, i))
    return ParetoReport(True)


def revenue_gap(
    instance: Instance, m: Fraction
) -> tuple[Fraction, Fraction, Fraction]:
    """(mechanism revenue, clock benchmark, max winner budget) under truth.

    Callers assert ``R* - b_max <= R <= R*``.
    """
    if not is_normalized(instance):
        raise ValueError("instance must be normalized")
    profile = BidProfile.truthful(instance)
    outcome = allocate_divisible(profile, m)
    r_star = clearing_price(profile, m).r_star
    # truthful profile of a normalized instance: rank order == bidder order
    k = outcome.cut.k
    b_max = max(b.budget for b in instance.bidders[:k])
    return outcome.revenue, r_star, b_max


def bidder_utility(
    outcome: Outcome, index: int, true_value: Fraction, true_budget: Fraction
) -> Utility:
    """Expected utility given true preferences; BOTTOM when the lottery can
    charge above the true budget (stated budget exceeds it and p > 0)."""
    payment = outcome.payments[index]
    if outcome.stated_budgets[index] > true_budget and payment > 0:
        return BOTTOM
    return outcome.units[index] * true_value - payment


def _utility_from_parts(
    units: Fraction,
    payment: Fraction,
    stated_budget: Fraction,
    true_value: Fraction,
    true_budget: Fraction,
) -> Utility:
    if stated_budget > true_budget and payment > 0:
        return BOTTOM
    return units * true_value - payment


def classify_deviation(
    true_value: Fraction,
    true_budget: Fraction,
    value: Fraction,
    budget: Fraction,
) -> str:
    """Single label per grid point. Budget overstatement dominates (the
    lottery punishes it regardless of the stated value); value
    overstatement absorbs mixed lies, since only it can ever profit."""
    if value == true_value and budget == true_budget:
        return "truthful"
    if budget > true_budget:
        return "budget-over"
    if value > true_value:
        return "value-over"
    if budget < true_budget:
        return "budget-under"
    return "value-under"


def best_deviation(
    instance: Instance,
    m: Fraction,
    bidder: int,
    value_grid: list[Fraction],
    budget_grid: list[Fraction],
    opponents: BidProfile | None = None,
) -> DeviationReport:
    """Exhaustive utility search over a deviation grid for one bidder.

    Opponents bid truthfully unless an explicit profile is supplied. The
    grid should contain the truthful point; ties on gain keep the earliest
    grid point, so the truthful point wins when nothing beats it.
    """
    base = opponents if opponents is not None else BidProfile.truthful(instance)
    true_value = instance.bidders[bidder].value
    true_budget = instance.bidders[bidder].budget

    truthful_point = base.with_bid(bidder, true_value, true_budget)
    units, payment = _allocation_or_rejection(truthful_point, m, bidder)
    u_truth = _utility_from_parts(units, payment, true_budget, true_value, true_budget)

    best_u: Utility = u_truth
    best_point = (true_value, true_budget)
    for value in value_grid:
        if value <= 0 or value <= instance.dummy_value:
            continue
        for budget in budget_grid:
            if budget < 0:
                continue
            if (value, budget) == (true_value, true_budget):
                continue
            trial = base.with_bid(bidder, value, budget)
            units, payment = _allocation_or_rejection(trial, m, bidder)
            u = _utility_from_parts(units, payment, budget, true_value, true_budget)
            if u > best_u:
                best_u = u
                best_point = (value, budget)

    if isinstance(u_truth, _MinusInfinity) or isinstance(best_u, _MinusInfinity):
        gain = Fraction(0)
    else:
        gain = best_u - u_truth
    return DeviationReport(
        bidder=bidder,
        best_deviation=best_point,
        utility_truthful=u_truth,
        utility_best=best_u,
        gain=gain,
        deviation_class=classify_deviation(true_value, true_budget, *best_point),
    )


def deviation_search(
    instance: Instance,
    m: Fraction,
    bidder: int,
    value_grid: list[Fraction],
    budget_grid: list[Fraction],
    opponents: BidProfile | None = None,
):
    """Yield (value, budget, class, gain) for every grid deviation."""
    base = opponents if opponents is not None else BidProfile.truthful(instance)
    true_value = instance.bidders[bidder].value
    true_budget = instance.bidders[bidder].budget
    truthful_point = base.with_bid(bidder, true_value, true_budget)
    units, payment = _allocation_or_rejection(truthful_point, m, bidder)
    u_truth = _utility_from_parts(units, payment, true_budget, true_value, true_budget)
    for value in value_grid:
        if value <= 0 or value <= instance.dummy_value:
            continue
        for budget in budget_grid:
            if budget < 0:
                continue
            trial = base.with_bid(bidder, value, budget)
            units, payment = _allocation_or_rejection(trial, m, bidder)
            u = _utility_from_parts(units, payment, budget, true_value, true_budget)
            if isinstance(u, _MinusInfinity):
                gain = BOTTOM
            elif isinstance(u_truth, _MinusInfinity):
                gain = Fraction(0)
            else:
                gain = u - u_truth
            yield value, budget, classify_deviation(
                true_value, true_budget, value, budget
            ), gain


def deviation_grids(
    instance: Instance,
    m: Fraction,
    bidder: int,
    n_values: int = 25,
    n_budgets: int = 25,
) -> tuple[list[Fraction], list[Fraction]]:
    """Deterministic deviation grids around the strategically critical
    points: the truthful bid, the clock clearing price, every opponent's
    value, and coarse budget fractions."""
    truthful = BidProfile.truthful(instance)
    v_star = clearing_price(truthful, m).clearing_price
    true_value = instance.bidders[bidder].value
    true_budget = instance.bidders[bidder].budget
    floor = instance.dummy_value * 2

    values = {true_value, true_value + 1}
    for step in (Fraction(1, 100), Fraction(1, 10), Fraction(1)):
        values.update((v_star - step, v_star, v_star + step))
    for i, b in enumerate(instance.bidders):
        if i != bidder and b.id != DUMMY_ID:
            values.update((b.value, b.value - Fraction(1, 100), b.value + Fraction(1, 100)))
    values = {v for v in values if v > floor}
    top = max(max(values), true_value) * Fraction(3, 2)
    i = 1
    while len(values) < n_values:
        v = floor + (top - floor) * Fraction(i, n_values + 1)
        values.add(v)
        i += 1
    values = sorted(values)
    while len(values) > n_values:  # trim spread points, never the anchors
        for v in values:
            if v != true_value and len(values) > n_values:
                values.remove(v)
                break

    budgets = {true_budget * f for f in (
        Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4),
        Fraction(1), Fraction(5, 4),
    )}
    span = max(true_budget * Fraction(5, 4), Fraction(1))
    i = 1
    while len(budgets) < n_budgets:
        budgets.add(span * Fraction(i, n_budgets + 3))
        i += 1
    budgets = sorted(budgets)
    while len(budgets) > n_budgets:
        for b in budgets:
            if b != true_budget and len(budgets) > n_budgets:
                budgets.remove(b)
                break
    return values, budgets


def is_equilibrium(
    profile: BidProfile,
    m: Fraction,
    grids: dict[int, tuple[list[Fraction], list[Fraction]]] | None = None,
    grid_size: int = 25,
) -> tuple[bool, DeviationReport | None]:
    """True iff no real bidder has a grid deviation with positive gain at
    the stated profile. Returns the worst deviation found, if any."""
    instance = profile.instance
    worst: DeviationReport | None = None
    for i, bidder in enumerate(instance.bidders):
        if bidder.id == DUMMY_ID:
            continue
        if grids is not None and i in grids:
            value_grid, budget_grid = grids[i]
        else:
            value_grid, budget_grid = deviation_grids(
                instance, m, i, grid_size, grid_size
            )
            stated_v, stated_b = profile.stated[i]
            if stated_v not in value_grid:
                value_grid = sorted(value_grid + [stated_v])
            if stated_b not in budget_grid:
                budget_grid = sorted(budget_grid + [stated_b])

        units, payment = _allocation_or_rejection(profile, m, i)
        u_cur = _utility_from_parts(
            units, payment, profile.stated[i][1], bidder.value, bidder.budget
        )
        best_u = u_cur
        best_point = profile.stated[i]
        for value in value_grid:
            if value <= 0 or value <= instance.dummy_value:
                continue
            for budget in budget_grid:
                if budget < 0:
                    continue
                trial = profile.with_bid(i, value, budget)
                tu, tp = _allocation_or_rejection(trial, m, i)
                u = _utility_from_parts(tu, tp, budget, bidder.value, bidder.budget)
                if u > best_u:
                    best_u = u
                    best_point = (value, budget)
        if isinstance(best_u, _MinusInfinity) or isinstance(u_cur, _MinusInfinity):
            gain = Fraction(0)
        else:
            gain = best_u - u_cur
        if gain > 0 and (worst is None or gain > worst.gain):
            worst = DeviationReport(
                bidder=i,
                best_deviation=best_point,
                utility_truthful=u_cur,
                utility_best=best_u,
                gain=gain,
                deviation_class=classify_deviation(
                    bidder.value, bidder.budget, *best_point
                ),
            )
    return worst is None, worst
