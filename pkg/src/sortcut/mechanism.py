"""The budget-auction core: price ladders, exact demand, market clearing,
divisible and indivisible allocation, the payment lottery, and cut-point
sensitivity.

The mechanism ranks bidders by stated value (ties: budget desc, id asc) and
looks for a breakpoint ``x`` in cumulative-budget space ``[0, B]``. Bidders
whose budget intervals lie left of ``x`` win and spend everything; the bidder
whose interval contains ``x`` (the boundary, rank ``k``) spends all but a
residual ``b'_k``; everyone after wins nothing. Each winner buys down a
price ladder: money up to ``b'_k`` at the boundary's stated value, then each
later bidder's budget at that bidder's stated value, ending at the dummy
tier. Demand ``D(x)`` is the total number of units the winners can afford
this way; it is piecewise linear and nondecreasing up to the clearing point,
so the minimal ``x*`` with ``D(x*) = supply`` is found exactly by locating
the bracketing linear piece and solving one linear equation.
"""
from __future__ import annotations

import hashlib
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction

from ._rat import Q0, to_fraction, to_q
from .model import DUMMY_ID, BidProfile, is_normalized


class NoClearingError(ValueError):
    """No breakpoint clears the market (demand never reaches the supply)."""


class IndivisibleClearingError(ValueError):
    """The integer demand step function jumps over the supply.

    Carries the bracketing breakpoints and both allocations so callers can
    inspect the gap.
    """

    def __init__(self, x_low, x_high, units_low, units_high):
        self.x_low = x_low
        self.x_high = x_high
        self.units_low = units_low
        self.units_high = units_high
        super().__init__(
            "no exact indivisible clearing: allocated units jump from "
            f"{sum(units_low)} at x={x_low} to {sum(units_high)} at x={x_high}"
        )


@dataclass(frozen=True)
class CutPoint:
    """Clearing breakpoint: position ``x``, boundary rank ``k`` (1-based in
    the price-sorted order), and the boundary bidder's unspent money."""

    x: Fraction
    k: int
    residual: Fraction


@dataclass(frozen=True)
class PriceLadder:
    """Descending price tiers a single buyer walks down: (unit price, money
    capacity) pairs. Capacities are per-buyer, not a shared pool."""

    segments: tuple[tuple[Fraction, Fraction], ...]

    def spend(self, money: Fraction) -> Fraction:
        """Units bought by spending ``money`` down the ladder. Money beyond
        the total capacity buys nothing (the ladder saturates)."""
        units = Fraction(0)
        left = money
        for price, capacity in self.segments:
            if left <= 0:
                break
            used = min(left, capacity)
            units += used / price
            left -= used
        return units


@dataclass(frozen=True)
class Outcome:
    """Result of an allocation: per-bidder units and expected payments, in
    the instance's bidder order."""

    mode: str
    supply: Fraction
    bidder_ids: tuple[str, ...]
    stated_values: tuple[Fraction, ...]
    stated_budgets: tuple[Fraction, ...]
    units: tuple[Fraction, ...]
    payments: tuple[Fraction, ...]
    revenue: Fraction
    dummy_tier_payment: Fraction
    cut: CutPoint | None

    @property
    def revenue_excluding_dummy_tier(self) -> Fraction:
        return self.revenue - self.dummy_tier_payment

    def total_units(self) -> Fraction:
        return sum(self.units, Fraction(0))


@dataclass(frozen=True)
class ChargeDraw:
    """One realized draw of the budget lottery."""

    seed: int
    payments: tuple[Fraction, ...]


# ---------------------------------------------------------------------------
# ranking and the exact demand core (internal, runs on the fast rational type)


@dataclass(frozen=True)
class _Ranked:
    order: tuple[int, ...]  # rank -> original index
    values: tuple          # stated values by rank, fast rationals
    budgets: tuple         # stated budgets by rank
    dummy_rank: int


def _check_profile(profile: BidProfile) -> None:
    if not is_normalized(profile.instance):
        raise ValueError("unnormalized profile")
    for bidder, (value, budget) in zip(profile.instance.bidders, profile.stated):
        if value <= 0 or budget < 0:
            raise ValueError(f"invalid stated bid for {bidder.id!r}")
        if bidder.id == DUMMY_ID and (value, budget) != (bidder.value, bidder.budget):
            raise ValueError("dummy must be truthful")


def _rank(profile: BidProfile) -> _Ranked:
    inst = profile.instance
    stated = profile.stated
    order = sorted(
        range(len(stated)),
        key=lambda i: (-stated[i][0], -stated[i][1], inst.bidders[i].id),
    )
    values = tuple(to_q(stated[i][0]) for i in order)
    budgets = tuple(to_q(stated[i][1]) for i in order)
    dummy_rank = order.index(len(stated) - 1)
    return _Ranked(tuple(order), values, budgets, dummy_rank)


def _prefix_sums(budgets) -> list:
    prefix = [Q0]
    for b in budgets:
        prefix.append(prefix[-1] + b)
    return prefix


def _tails(values, budgets, start):
    """Cumulative money and units over the ladder tail ``start..n-1``."""
    cum_money, cum_units = [], []
    money = Q0
    units = Q0
    for j in range(start, len(values)):
        money += budgets[j]
        units += budgets[j] / values[j]
        cum_money.append(money)
        cum_units.append(units)
    return cum_money, cum_units


def _tail_units(values, start, cum_money, cum_units, w):
    """Units bought by spending ``w`` over the tail; saturates at its end."""
    if w <= 0 or not cum_money:
        return Q0
    if w >= cum_money[-1]:
        return cum_units[-1]
    t = bisect_left(cum_money, w)
    prev_money = cum_money[t - 1] if t else Q0
    prev_units = cum_units[t - 1] if t else Q0
    return prev_units + (w - prev_money) / values[start + t]


def _interval_demand(values, budgets, k0, cum_money, cum_units, residual):
    """Total demand with boundary at rank ``k0`` holding ``residual`` unspent."""
    vk = values[k0]
    start = k0 + 1
    total = Q0
    for i in range(k0):
        w = budgets[i]
        if w <= residual:
            total += w / vk
        else:
            total += residual / vk
            total += _tail_units(values, start, cum_money, cum_units, w - residual)
    spend = budgets[k0] - residual
    total += _tail_units(values, start, cum_money, cum_units, spend)
    return total


def _canonical_boundary(prefix, x):
    """Largest 0-based rank ``k0`` with ``prefix[k0] <= x`` (capped at n-1)."""
    k0 = bisect_right(prefix, x) - 1
    return min(k0, len(prefix) - 2)


def _clear_core(ranked: _Ranked, m):
    """Exact minimal clearing breakpoint. Returns (x, k0, residual, prefix)."""
    values, budgets = ranked.values, ranked.budgets
    n = len(values)
    prefix = _prefix_sums(budgets)

    for k0 in range(n):
        bk = budgets[k0]
        if bk == 0:
            continue
        start = k0 + 1
        cum_money, cum_units = _tails(values, budgets, start)
        d_right = _interval_demand(values, budgets, k0, cum_money, cum_units, Q0)
        if d_right < m:
            continue

        # Crossing interval. Candidate residuals where D's slope can change:
        # a winner fitting exactly into the first segment, or a walk ending
        # exactly at a tail segment boundary.
        cands = {Q0, bk}
        for i in range(k0):
            bi = budgets[i]
            if bi == 0:
                continue
            if bi < bk:
                cands.add(bi)
            for c in cum_money:
                r = bi - c
                if Q0 < r < bk:
                    cands.add(r)
        for c in cum_money:
            r = bk - c
            if Q0 < r < bk:
                cands.add(r)
        rs = sorted(cands, reverse=True)  # descending residual = ascending x

        def demand(r):
            return _interval_demand(values, budgets, k0, cum_money, cum_units, r)

        # D(rs[0]) < m (continuity with the previous interval's right edge)
        # and D(rs[-1]) = d_right >= m. Along ascending x the predicate
        # "D >= m" flips false->true exactly once as long as every ladder
        # ends at the dummy segment, which makes binary search sound.
        if k0 < ranked.dummy_rank:
            lo, hi = 0, len(rs) - 1
            d_lo, d_hi = None, d_right
            while hi - lo > 1:
                mid = (lo + hi) // 2
                d_mid = demand(rs[mid])
                if d_mid >= m:
                    hi, d_hi = mid, d_mid
                else:
                    lo, d_lo = mid, d_mid
            if d_lo is None:
                d_lo = demand(rs[lo])
        else:
            lo = None
            d_prev = None
            for idx in range(len(rs)):
                d_here = demand(rs[idx])
                if d_here >= m:
                    hi, d_hi = idx, d_here
                    lo, d_lo = idx - 1, d_prev
                    break
                d_prev = d_here
            if lo is None:
                continue
            if lo < 0:
                raise AssertionError("demand crossed before the interval start")

        # Linear piece between rs[hi] (D >= m) and rs[lo] (D < m); take the
        # largest residual with D = m, i.e. the smallest clearing x.
        r_at, r_below = rs[hi], rs[lo]
        if d_hi == m:
            r_star = r_at
        else:
            r_star = r_at + (d_hi - m) * (r_below - r_at) / (d_hi - d_lo)

        x = prefix[k0 + 1] - r_star
        k0c = _canonical_boundary(prefix, x)
        return x, k0c, prefix[k0c + 1] - x, prefix

    raise NoClearingError("demand never reaches the supply on [0, B]")


def _walk(values, budgets, k0, cum_money, cum_units, residual, money, dummy_rank):
    """Walk one winner's ladder. Returns (units, money spent at dummy tier)."""
    start = k0 + 1
    used_first = min(money, residual)
    units = used_first / values[k0] if used_first > 0 else Q0
    rest = money - used_first
    dummy_money = Q0
    if rest > 0 and cum_money:
        units += _tail_units(values, start, cum_money, cum_units, rest)
        di = dummy_rank - start
        if 0 <= di < len(cum_money):
            before = cum_money[di - 1] if di else Q0
            overlap = min(rest, cum_money[di]) - before
            if overlap > 0:
                dummy_money = overlap
    return units, dummy_money


# ---------------------------------------------------------------------------
# public operations


def ladder_for(profile: BidProfile, cut: CutPoint, consumer: int) -> PriceLadder:
    """Price ladder faced by ``consumer`` (1-based rank in the price-sorted
    order). Ranks below the boundary start at (boundary value, residual);
    the boundary bidder starts one tier lower. Losers have no ladder."""
    _check_profile(profile)
    if consumer > cut.k:
        raise ValueError("losers have no price ladder")
    if consumer < 1:
        raise ValueError("consumer rank is 1-based")
    ranked = _rank(profile)
    k0 = cut.k - 1
    segments = []
    if consumer <= k0:
        segments.append((to_fraction(ranked.values[k0]), cut.residual))
    for j in range(k0 + 1, len(ranked.values)):
        segments.append(
            (to_fraction(ranked.values[j]), to_fraction(ranked.budgets[j]))
        )
    return PriceLadder(tuple(segments))


def demand_at(profile: BidProfile, m: Fraction, x: Fraction) -> Fraction:
    """Exact demand D(x): units affordable by the winners at breakpoint x.

    ``m`` only scales the dummy bidder's budget (already part of the
    instance); the value is computed from the ladders alone.
    """
    _check_profile(profile)
    ranked = _rank(profile)
    prefix = _prefix_sums(ranked.budgets)
    xq = to_q(x)
    if xq < 0 or xq > prefix[-1]:
        raise ValueError("x must lie in [0, B]")
    k0 = _canonical_boundary(prefix, xq)
    cum_money, cum_units = _tails(ranked.values, ranked.budgets, k0 + 1)
    d = _interval_demand(
        ranked.values, ranked.budgets, k0, cum_money, cum_units, prefix[k0 + 1] - xq
    )
    return to_fraction(d)


def clear(profile: BidProfile, m: Fraction) -> CutPoint:
    """Minimal breakpoint x* with D(x*) = m, solved exactly."""
    _check_profile(profile)
    if m <= 0:
        raise ValueError("supply must be positive")
    ranked = _rank(profile)
    x, k0, residual, _ = _clear_core(ranked, to_q(m))
    return CutPoint(to_fraction(x), k0 + 1, to_fraction(residual))


def allocate_divisible(profile: BidProfile, m: Fraction) -> Outcome:
    """Clear the market and allocate divisible units along the ladders.

    Winners below the boundary pay their full stated budgets, the boundary
    pays its spent amount, losers pay nothing; revenue equals x*.
    """
    _check_profile(profile)
    if m <= 0:
        raise ValueError("supply must be positive")
    ranked = _rank(profile)
    mq = to_q(m)
    x, k0, residual, prefix = _clear_core(ranked, mq)
    values, budgets = ranked.values, ranked.budgets
    n = len(values)
    cum_money, cum_units = _tails(values, budgets, k0 + 1)

    units_by_rank = [Q0] * n
    pays_by_rank = [Q0] * n
    dummy_money = Q0
    for i in range(k0):
        u, dm = _walk(
            values, budgets, k0, cum_money, cum_units, residual, budgets[i],
            ranked.dummy_rank,
        )
        units_by_rank[i] = u
        pays_by_rank[i] = budgets[i]
        dummy_money += dm
    spend = budgets[k0] - residual
    u, dm = _walk(
        values, budgets, k0, cum_money, cum_units, Q0, spend, ranked.dummy_rank
    )
    units_by_rank[k0] = u
    pays_by_rank[k0] = spend
    dummy_money += dm

    total = sum(units_by_rank, Q0)
    if total != mq:
        raise AssertionError("clearing allocation does not exhaust the supply")

    units = [Fraction(0)] * n
    pays = [Fraction(0)] * n
    for rank, orig in enumerate(ranked.order):
        units[orig] = to_fraction(units_by_rank[rank])
        pays[orig] = to_fraction(pays_by_rank[rank])
    return Outcome(
        mode="divisible",
        supply=m,
        bidder_ids=tuple(b.id for b in profile.instance.bidders),
        stated_values=tuple(v for v, _ in profile.stated),
        stated_budgets=tuple(b for _, b in profile.stated),
        units=tuple(units),
        payments=tuple(pays),
        revenue=to_fraction(x),
        dummy_tier_payment=to_fraction(dummy_money),
        cut=CutPoint(to_fraction(x), k0 + 1, to_fraction(residual)),
    )


def bidder_allocation(
    profile: BidProfile, m: Fraction, index: int
) -> tuple[Fraction, Fraction]:
    """Units and expected payment of one bidder under divisible allocation.

    Fast path for deviation searches: clears the market but walks only the
    requested bidder's ladder.
    """
    _check_profile(profile)
    if m <= 0:
        raise ValueError("supply must be positive")
    ranked = _rank(profile)
    x, k0, residual, prefix = _clear_core(ranked, to_q(m))
    rank = ranked.order.index(index)
    if rank > k0:
        return Fraction(0), Fraction(0)
    cum_money, cum_units = _tails(ranked.values, ranked.budgets, k0 + 1)
    if rank < k0:
        money = ranked.budgets[rank]
        first_capacity = residual
    else:
        money = ranked.budgets[k0] - residual
        first_capacity = Q0
    units, _ = _walk(
        ranked.values, ranked.budgets, k0, cum_money, cum_units, first_capacity,
        money, ranked.dummy_rank,
    )
    return to_fraction(units), to_fraction(money)


def _indivisible_serve(ranked: _Ranked, m_units: int, prefix, xq):
    """Serve whole units at breakpoint ``xq``: ranks in value order, each
    purchase capped by remaining supply; a tier the buyer can only partially
    afford ends her walk. Dummy-tier units are allocated free of charge.
    Returns (units by rank, payments by rank, boundary k0, residual)."""
    values, budgets = ranked.values, ranked.budgets
    n = len(values)
    k0 = _canonical_boundary(prefix, xq)
    residual = prefix[k0 + 1] - xq
    cap_k = int(residual // values[k0])

    tiers = [(k0, values[k0], cap_k)]
    for j in range(k0 + 1, n):
        tiers.append((j, values[j], int(budgets[j] // values[j])))

    supply = m_units
    units = [0] * n
    pays = [Q0] * n
    for i in range(k0 + 1):
        if supply == 0:
            break
        if i < k0:
            money = budgets[i]
            walk = tiers
        else:
            money = budgets[k0] - residual
            walk = tiers[1:]
        for rank_j, price, capacity in walk:
            if supply == 0:
                break
            available = capacity if capacity < supply else supply
            afford = int(money // price)
            bought = min(available, afford)
            if bought > 0:
                units[i] += bought
                supply -= bought
                if rank_j != ranked.dummy_rank:
                    money -= bought * price
                    pays[i] += bought * price
            if afford < available:
                break
    return units, pays, k0, residual


def indivisible_allocation_at(
    profile: BidProfile, m: int, x: Fraction
) -> tuple[tuple[int, ...], tuple[Fraction, ...], int]:
    """Whole-unit allocation at an arbitrary trial breakpoint ``x``.

    Returns (units, payments, total units) in the instance's bidder order.
    """
    _check_profile(profile)
    ranked = _rank(profile)
    prefix = _prefix_sums(ranked.budgets)
    units_r, pays_r, _, _ = _indivisible_serve(ranked, int(m), prefix, to_q(x))
    n = len(units_r)
    units = [0] * n
    pays = [Fraction(0)] * n
    for rank, orig in enumerate(ranked.order):
        units[orig] = units_r[rank]
        pays[orig] = to_fraction(pays_r[rank])
    return tuple(units), tuple(pays), sum(units_r)


def _indivisible_candidates(ranked: _Ranked, prefix, k0):
    """Breakpoints in [prefix[k0], prefix[k0+1]) where the integer demand
    step function can change value."""
    values, budgets = ranked.values, ranked.budgets
    left, right = prefix[k0], prefix[k0 + 1]
    bk = budgets[k0]
    cands = {left}
    vk = values[k0]
    t = 1
    while t * vk < bk:
        cands.add(right - t * vk)
        t += 1
    base = Q0
    for j in range(k0 + 1, len(values)):
        cap = int(budgets[j] // values[j])
        for a in range(1, cap + 1):
            w = base + a * values[j]
            if w >= bk:
                break
            cands.add(left + w)
        base += cap * values[j]
        if base >= bk:
            break
    return sorted(cands)


def allocate_indivisible(profile: BidProfile, m: int) -> Outcome:
    """Whole-unit variant: scan the breakpoints of the integer demand step
    function in ascending order and clear at the first one selling exactly
    ``m`` units. Supply-capped serving keeps the total at or below ``m``;
    when every breakpoint stays below, the scan cannot clear and the error
    carries the best breakpoint plus its successor with both allocations."""
    _check_profile(profile)
    if m != int(m) or m <= 0:
        raise ValueError("indivisible supply must be a positive integer")
    m_units = int(m)
    ranked = _rank(profile)
    prefix = _prefix_sums(ranked.budgets)
    n = len(ranked.values)

    candidates = []
    for k0 in range(n):
        if ranked.budgets[k0] == 0:
            continue
        candidates.extend(_indivisible_candidates(ranked, prefix, k0))

    best = None  # (total, index, units by rank)
    for idx, xq in enumerate(candidates):
        units_r, pays_r, bk0, residual = _indivisible_serve(
            ranked, m_units, prefix, xq
        )
        total = sum(units_r)
        if total > m_units:
            raise AssertionError("supply-capped serving exceeded the supply")
        if total == m_units:
            units = [0] * n
            pays = [Fraction(0)] * n
            for rank, orig in enumerate(ranked.order):
                units[orig] = Fraction(units_r[rank])
                pays[orig] = to_fraction(pays_r[rank])
            revenue = sum(pays, Fraction(0))
            return Outcome(
                mode="indivisible",
                supply=Fraction(m_units),
                bidder_ids=tuple(b.id for b in profile.instance.bidders),
                stated_values=tuple(v for v, _ in profile.stated),
                stated_budgets=tuple(b for _, b in profile.stated),
                units=tuple(units),
                payments=tuple(pays),
                revenue=revenue,
                dummy_tier_payment=Fraction(0),
                cut=CutPoint(to_fraction(xq), bk0 + 1, to_fraction(residual)),
            )
        if best is None or total > best[0]:
            best = (total, idx, units_r)

    total, idx, units_low = best
    if idx + 1 < len(candidates):
        x_high = candidates[idx + 1]
    else:
        x_high = prefix[-1]
    units_high, _, _, _ = _indivisible_serve(ranked, m_units, prefix, x_high)
    raise IndivisibleClearingError(
        to_fraction(candidates[idx]),
        to_fraction(x_high),
        _units_in_instance_order(ranked, units_low),
        _units_in_instance_order(ranked, units_high),
    )


def _units_in_instance_order(ranked: _Ranked, units_by_rank) -> tuple[int, ...]:
    out = [0] * len(units_by_rank)
    for rank, orig in enumerate(ranked.order):
        out[orig] = units_by_rank[rank]
    return tuple(out)


def charge_lottery(outcome: Outcome, seed: int) -> ChargeDraw:
    """Randomized charging: each bidder pays her stated budget with
    probability p_i / b_i and zero otherwise, so the expected payment is
    exactly p_i. One independent draw per bidder, keyed by (seed, id)."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    realized = []
    for bidder_id, p, b in zip(
        outcome.bidder_ids, outcome.payments, outcome.stated_budgets
    ):
        if p < 0 or p > b:
            raise ValueError(f"payment for {bidder_id!r} violates the stated budget")
        if p == 0:
            realized.append(Fraction(0))
        elif p == b:
            realized.append(b)
        else:
            digest = hashlib.sha256(f"{seed}:{bidder_id}".encode()).digest()
            u = Fraction(int.from_bytes(digest[:16], "big"), 2**128)
            realized.append(b if u < p / b else Fraction(0))
    return ChargeDraw(seed=seed, payments=tuple(realized))


def cut_shift(
    profile: BidProfile, m: Fraction, j: int, eps: Fraction
) -> tuple[Fraction, Fraction]:
    """Clearing breakpoints before and after bidder at rank ``j`` (1-based,
    price-sorted) understates her budget by ``eps``.

    Shrinking a budget also shifts the cumulative-budget axis, so the raw
    new breakpoint is not directly comparable to the old one. The second
    value is therefore expressed in the original profile's coordinates
    (``eps`` is added back whenever the new cut lands after bidder ``j``),
    which is the frame in which the shift is bounded: the cut rises by at
    most ``eps`` when a winner understates and falls by at most ``eps``
    when the boundary bidder or a loser does.
    """
    _check_profile(profile)
    ranked = _rank(profile)
    if not 1 <= j <= len(ranked.order):
        raise ValueError("bidder rank out of range")
    orig = ranked.order[j - 1]
    if profile.instance.bidders[orig].id == DUMMY_ID:
        raise ValueError("the dummy bidder's budget is fixed")
    budget = profile.stated[orig][1]
    if eps < 0 or eps > budget:
        raise ValueError("eps must satisfy 0 <= eps <= the stated budget")
    cut_before = clear(profile, m)
    x = cut_before.x
    modified = profile.with_bid(orig, budget=budget - eps)
    x_after = clear(modified, m).x
    if j < cut_before.k:
        # a winner's interval lies wholly left of the cut, so her removed
        # money shifts the whole axis; add it back for comparability
        x_after += eps
    return x, x_after
