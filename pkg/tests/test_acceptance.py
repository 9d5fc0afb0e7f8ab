"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as the
criteria execute. Every tolerance is pinned here; exact assertions carry no
tolerance at all.
"""
import random
from contextlib import contextmanager
from dataclasses import replace
from fractions import Fraction

from sortcut import (
    BidProfile,
    Bidder,
    CutPoint,
    Instance,
    allocate_divisible,
    allocate_indivisible,
    best_deviation,
    charge_lottery,
    clear,
    clearing_price,
    cut_shift,
    deviation_grids,
    is_pareto_divisible,
    normalize,
    revenue_gap,
    run_dynamics,
)
from sortcut.analysis import deviation_search
from sortcut.dynamics import DynamicsConfig
from sortcut.mechanism import _rank

from conftest import bisection_clear, make_instance, random_instance


@contextmanager
def criterion(number: int, description: str):
    try:
        yield
    except BaseException:
        print(f"criterion {number:2d}: FAIL - {description}")
        raise
    print(f"criterion {number:2d}: PASS - {description}")


def reference_instance() -> Instance:
    return make_instance(
        [("a", 10, 55), ("b", 9, 60), ("c", 7, 40), ("d", 6, 30)], 19
    )


def test_c01_indivisible_reference_solution():
    with criterion(1, "indivisible reference: x=121, k=3, residual=34, "
                      "allocations (8,11), payments (52,58), exact"):
        out = allocate_indivisible(BidProfile.truthful(reference_instance()), 19)
        assert out.cut == CutPoint(Fraction(121), 3, Fraction(34))
        assert out.units[:2] == (8, 11)
        assert out.payments[:2] == (52, 58)
        assert out.units[2:] == (0, 0, 0)


def test_c02_divisible_reference_solution():
    with criterion(2, "divisible reference: x*=1108/9 with exact allocations "
                      "and payments; decimals within 0.01 of the published "
                      "approximations"):
        out = allocate_divisible(BidProfile.truthful(reference_instance()), Fraction(19))
        assert out.cut.x == Fraction(1108, 9)
        assert out.units[:3] == (Fraction(227, 27), Fraction(499, 54), Fraction(73, 54))
        assert out.payments[:3] == (55, 60, Fraction(73, 9))
        published = {
            out.cut.x: 123.11,
            out.units[0]: 8.4,
            out.units[1]: 9.25,
            out.units[2]: 1.35,
            out.payments[2]: 8.11,
        }
        for exact, approx in published.items():
            assert abs(float(exact) - approx) <= 0.01


def test_c03_clock_reference_solutions():
    with criterion(3, "ascending auction: reference gives v*=7, R*=133; the "
                      "two 2-bidder cases give (3,15) and (1,5), exact"):
        result = clearing_price(BidProfile.truthful(reference_instance()), Fraction(19))
        assert result.clearing_price == 7
        assert result.r_star == 133
        assert result.outcome.units[0] == Fraction(55, 7)
        assert result.outcome.payments[2] == 18

        jump = make_instance([("a", 3, 20), ("b", 2, 3)], 5)
        r1 = clearing_price(BidProfile.truthful(jump), Fraction(5))
        assert (r1.clearing_price, r1.r_star) == (3, 15)

        interior = make_instance([("a", 3, 2), ("b", 2, 3)], 5)
        r2 = clearing_price(BidProfile.truthful(interior), Fraction(5))
        assert (r2.clearing_price, r2.r_star) == (1, 5)


def test_c04_revenue_identity_on_randoms():
    with criterion(4, "R* = m * v* exactly on 500 random instances"):
        rng = random.Random(4001)
        for _ in range(500):
            inst = random_instance(rng, max_real=6)
            result = clearing_price(BidProfile.truthful(inst), inst.supply)
            assert result.r_star == inst.supply * result.clearing_price
            assert sum(result.outcome.payments) == result.r_star


def test_c05_pareto_suite():
    with criterion(5, "divisible outcomes Pareto-optimal on 1000 random "
                      "instances; injected violations detected with correct "
                      "witnesses"):
        rng = random.Random(5001)
        for i in range(1000):
            inst = random_instance(rng, max_real=6)
            profile = BidProfile.truthful(inst)
            out = allocate_divisible(profile, inst.supply)
            assert is_pareto_divisible(profile, out).is_pareto
            if i % 50 == 0:
                withheld = replace(
                    out, units=(out.units[0] - Fraction(1, 2),) + out.units[1:]
                )
                report = is_pareto_divisible(profile, withheld)
                assert not report.is_pareto
                assert report.witness == ("unsold", Fraction(1, 2))
                allocated = [
                    j for j, u in enumerate(out.units)
                    if u > 0 and out.stated_values[j] < out.stated_values[0]
                ]
                if out.payments[0] > 0 and allocated:
                    slack = replace(
                        out, payments=(out.payments[0] / 2,) + out.payments[1:]
                    )
                    report = is_pareto_divisible(profile, slack)
                    assert not report.is_pareto
                    assert report.witness == ("budget-slack", 0, allocated[0])


def test_c06_revenue_bounds():
    with criterion(6, "R* - b_max <= R <= R* exactly on 500 random truthful "
                      "instances; single-bidder instance shows tightness"):
        rng = random.Random(6001)
        for _ in range(500):
            inst = random_instance(rng, max_real=6)
            revenue, r_star, b_max = revenue_gap(inst, inst.supply)
            assert r_star - b_max <= revenue <= r_star
        solo = make_instance([("solo", 5, 10)], 2, eps=Fraction(1, 100))
        revenue, r_star, b_max = revenue_gap(solo, Fraction(2))
        assert (r_star, b_max) == (10, 10)
        assert revenue == Fraction(2, 100)  # dummy-scale: the bound is tight


def witness_instance() -> Instance:
    return make_instance(
        [("w1", 10, 30), ("w2", 9, 30), ("j", 8, 40), ("lo", 2, 100)],
        Fraction(37, 5),
        eps=Fraction(1, 100),
    )


def test_c07_semi_truthfulness_suite():
    with criterion(7, "no profitable budget or value-understating deviation "
                      "on 200 random instances with 25x25 grids; a pinned "
                      "loser profits by overstating her value"):
        rng = random.Random(7001)
        bad = ("budget-under", "budget-over", "value-under")
        for _ in range(200):
            inst = random_instance(
                rng, max_real=4, value_pool=range(1, 31), distinct_values=True
            )
            for bidder in range(len(inst.bidders) - 1):
                grids = deviation_grids(inst, inst.supply, bidder, 25, 25)
                assert len(grids[0]) == 25 and len(grids[1]) == 25
                for value, budget, cls, gain in deviation_search(
                    inst, inst.supply, bidder, *grids
                ):
                    if cls in bad:
                        assert not (
                            isinstance(gain, Fraction) and gain > 0
                        ), (inst, bidder, value, budget, cls, gain)

        pinned = witness_instance()
        out = allocate_divisible(BidProfile.truthful(pinned), pinned.supply)
        assert out.units[2] == 0  # the deviator loses when truthful
        report = best_deviation(
            pinned, pinned.supply, 2,
            *deviation_grids(pinned, pinned.supply, 2, 25, 25),
        )
        assert report.deviation_class == "value-over"
        assert report.gain > 0


def test_c08_cut_shift_bounds():
    with criterion(8, "budget-understatement shifts the cut by at most eps, "
                      "upward for winners and downward otherwise, on 200 "
                      "random triples, exact"):
        rng = random.Random(8001)
        done = 0
        while done < 200:
            inst = random_instance(rng, max_real=6)
            profile = BidProfile.truthful(inst)
            cut = clear(profile, inst.supply)
            j = rng.randint(1, len(inst.bidders) - 1)
            orig = _rank(profile).order[j - 1]
            budget = profile.stated[orig][1]
            if budget == 0:
                continue
            eps = budget * Fraction(rng.randint(0, 16), 16)
            x, x_after = cut_shift(profile, inst.supply, j, eps)
            if j < cut.k:
                assert x <= x_after <= x + eps
            else:
                assert x - eps <= x_after <= x
            done += 1


def test_c09_oracle_equivalence():
    with criterion(9, "exact clearing equals the rational-bisection oracle "
                      "on 1000 random instances"):
        rng = random.Random(9001)
        for _ in range(1000):
            inst = random_instance(rng, max_real=6)
            profile = BidProfile.truthful(inst)
            assert clear(profile, inst.supply).x == bisection_clear(
                profile, inst.supply
            )


def dynamics_instance(rng: random.Random) -> Instance:
    """Random instance with distinct values and enough total money that the
    benchmark revenue is at most half of it."""
    while True:
        n = rng.randint(2, 4)
        values = rng.sample(range(1, 9), n)
        bidders = tuple(
            Bidder(f"b{i}", Fraction(values[i]), Fraction(rng.randint(10, 80)))
            for i in range(n)
        )
        inst = normalize(
            Instance(Fraction(rng.randint(2, 10)), bidders, Fraction(1, 1000))
        )
        r_star = clearing_price(BidProfile.truthful(inst), inst.supply).r_star
        if inst.total_budget >= 2 * r_star:
            return inst


def test_c10_dynamics_convergence():
    delta = Fraction(1, 100)
    with criterion(10, "greedy bidding converges on 50 random instances with "
                       "ample money: strict losers end within delta of v*, "
                       "revenue within 2*m*delta of R*"):
        rng = random.Random(10001)
        config = DynamicsConfig(step=delta, max_rounds=100_000, record_every=25_000)
        for _ in range(50):
            inst = dynamics_instance(rng)
            result = clearing_price(BidProfile.truthful(inst), inst.supply)
            trace = run_dynamics(inst, inst.supply, config)
            assert trace.converged, inst
            final = trace.final_outcome
            assert abs(final.revenue - result.r_star) <= 2 * inst.supply * delta, inst
            for (bid, _), units, bidder in zip(
                trace.final_profile.stated, final.units, inst.bidders
            ):
                if bidder.id != "~dummy" and units == 0:
                    assert abs(bid - result.clearing_price) <= delta, (inst, bid)


def test_c11_lottery_statistics():
    with criterion(11, "lottery draws for the reference boundary bidder "
                       "average the expected payment within 3 standard "
                       "errors over 100000 seeds; realized payments never "
                       "exceed budgets"):
        out = allocate_divisible(BidProfile.truthful(reference_instance()), Fraction(19))
        expected = out.payments[2]
        assert expected == Fraction(73, 9)
        budget = out.stated_budgets[2]
        n = 100_000
        total = Fraction(0)
        hits = 0
        for seed in range(n):
            draw = charge_lottery(out, seed)
            payment = draw.payments[2]
            assert payment <= budget
            assert all(p <= b for p, b in zip(draw.payments, out.stated_budgets))
            total += payment
            if payment:
                hits += 1
        mean = total / n
        p = float(expected / budget)
        stderr = float(budget) * (p * (1 - p) / n) ** 0.5
        assert abs(float(mean - expected)) <= 3 * stderr, (mean, hits)
