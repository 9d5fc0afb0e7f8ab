"""Shared fixtures, random instance generation, and independent oracles."""
from __future__ import annotations

import random
from fractions import Fraction

import pytest

from sortcut import BidProfile, Bidder, Instance, demand_at, normalize


def make_instance(spec, m, eps=Fraction(1, 1000)) -> Instance:
    """spec: iterable of (id, value, budget); values/budgets coerced exactly."""
    bidders = tuple(Bidder(i, Fraction(v), Fraction(b)) for i, v, b in spec)
    return normalize(Instance(Fraction(m), bidders, Fraction(eps)))


@pytest.fixture
def four_bidders() -> Instance:
    """The running 19-unit, four-bidder instance used across the suite."""
    return make_instance(
        [("a", 10, 55), ("b", 9, 60), ("c", 7, 40), ("d", 6, 30)], 19
    )


def random_instance(
    rng: random.Random,
    max_real: int = 6,
    value_pool=range(1, 51),
    budget_pool=range(1, 51),
    supply_pool=range(1, 31),
    eps=Fraction(1, 1000),
    distinct_values: bool = False,
) -> Instance:
    n = rng.randint(2, max_real)
    pool = list(value_pool)
    if distinct_values:
        values = rng.sample(pool, n)
    else:
        values = [rng.choice(pool) for _ in range(n)]
    bidders = tuple(
        Bidder(f"b{i}", Fraction(values[i]), Fraction(rng.choice(list(budget_pool))))
        for i in range(n)
    )
    return normalize(Instance(Fraction(rng.choice(list(supply_pool))), bidders, eps))


# --- independent clearing oracle -------------------------------------------
#
# Rational bisection on the breakpoint: narrow [lo, hi] with D(lo) < m <= D(hi)
# below width 2^-80, then recover the unique small-denominator rational in the
# bracket and confirm it exactly: D there equals m and demand just left of it
# falls short. Only `demand_at` is shared with the solver under test.

_TINY = Fraction(1, 2**80)


def bisection_clear(profile: BidProfile, m: Fraction) -> Fraction:
    instance = profile.instance
    total = sum(b for _, b in profile.stated)
    hi = total - instance.dummy_budget  # left edge of the dummy's interval
    lo = Fraction(0)
    assert demand_at(profile, m, hi) >= m, "oracle bracket: dummy cannot absorb"
    assert demand_at(profile, m, lo) < m
    for _ in range(82):
        mid = (lo + hi) / 2
        if demand_at(profile, m, mid) >= m:
            hi = mid
        else:
            lo = mid
    recovered = ((lo + hi) / 2).limit_denominator(2**39)
    assert lo < recovered <= hi, "oracle recovery left the bracket"
    assert demand_at(profile, m, recovered) == m
    left_probe = max(Fraction(0), recovered - _TINY)
    assert demand_at(profile, m, left_probe) < m, "recovered point is not minimal"
    return recovered


# --- independent clock oracle ----------------------------------------------


def clock_bracket(profile: BidProfile, m: Fraction, steps: int = 2000):
    """Bracket the ascending-auction clearing price with a fine price sweep.

    Demand at price p is (sum of budgets of bidders with stated value >= p)
    divided by p; returns (p_low, p_high] containing the first price where
    demand no longer exceeds supply.
    """
    pairs = sorted(profile.stated, key=lambda vb: vb[0], reverse=True)
    top = pairs[0][0] * 2

    def over_demand(p: Fraction) -> bool:
        money = Fraction(0)
        for value, budget in pairs:
            if value >= p:
                money += budget
            else:
                break
        return money > m * p

    previous = Fraction(0)
    for g in range(1, steps + 1):
        p = top * Fraction(g, steps)
        if not over_demand(p):
            return previous, p
        previous = p
    raise AssertionError("price sweep never cleared")
