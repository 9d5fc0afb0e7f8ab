"""Command-line front end: instance files, subcommands for every operation,
deterministic seeding, and machine-readable reports.

Instance files are JSON with exact rational literals (``"p/q"`` or integer
strings)::

    {
      "supply": "19",
      "dummy_value": "1/1000",
      "bidders": [
        {"id": "a", "value": "10", "budget": "55"},
        {"id": "b", "value": "9", "budget": "60",
         "stated": {"value": "9", "budget": "50"}}
      ]
    }

Exit codes: 0 when every property check passes, 1 when a check fails (the
witness is printed), 2 on input or usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import analysis, clock, dynamics, mechanism, model
from .model import BidProfile, Bidder, Instance, DUMMY_ID


def _rat(value: Fraction) -> dict:
    return {"exact": model.format_rational(value), "decimal": model.decimal_string(value)}


def parse_instance(path: str) -> BidProfile:
    """Load, validate and normalize an instance file; apply stated overrides."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None

    def rational_field(obj: dict, key: str, where: str) -> Fraction:
        if key not in obj:
            raise ValueError(f"{path}: missing {key!r} in {where}")
        try:
            return model.parse_rational(str(obj[key]))
        except ValueError as exc:
            raise ValueError(f"{path}: {where}: {exc}") from None

    supply = rational_field(raw, "supply", "instance")
    dummy_value = rational_field(raw, "dummy_value", "instance")
    if not isinstance(raw.get("bidders"), list):
        raise ValueError(f"{path}: missing or malformed 'bidders' list")

    bidders = []
    overrides = {}
    for pos, entry in enumerate(raw["bidders"]):
        where = f"bidder #{pos}"
        bidder_id = entry.get("id")
        if not isinstance(bidder_id, str) or not bidder_id:
            raise ValueError(f"{path}: {where}: missing id")
        value = rational_field(entry, "value", where)
        budget = rational_field(entry, "budget", where)
        try:
            bidders.append(Bidder(bidder_id, value, budget))
        except ValueError as exc:
            raise ValueError(f"{path}: {where}: {exc}") from None
        if "stated" in entry:
            stated = entry["stated"]
            overrides[bidder_id] = (
                rational_field(stated, "value", f"{where} stated")
                if "value" in stated else value,
                rational_field(stated, "budget", f"{where} stated")
                if "budget" in stated else budget,
            )

    instance = model.normalize(Instance(supply, tuple(bidders), dummy_value))
    stated = tuple(
        overrides.get(b.id, (b.value, b.budget)) for b in instance.bidders
    )
    profile = BidProfile(instance, stated)
    violations = model.validate(profile)
    if violations:
        raise ValueError(f"{path}: invalid stated bids: " + "; ".join(violations))
    return profile


def serialize_instance(profile: BidProfile) -> str:
    """Inverse of `parse_instance`; parse(serialize(p)) equals p."""
    instance = profile.instance
    bidders = []
    for bidder, (sv, sb) in zip(instance.bidders, profile.stated):
        if bidder.id == DUMMY_ID:
            continue
        entry = {
            "id": bidder.id,
            "value": model.format_rational(bidder.value),
            "budget": model.format_rational(bidder.budget),
        }
        if (sv, sb) != (bidder.value, bidder.budget):
            entry["stated"] = {
                "value": model.format_rational(sv),
                "budget": model.format_rational(sb),
            }
        bidders.append(entry)
    return json.dumps(
        {
            "supply": model.format_rational(instance.supply),
            "dummy_value": model.format_rational(instance.dummy_value),
            "bidders": bidders,
        },
        indent=2,
    ) + "\n"


def _bidder_rows(profile: BidProfile, outcome=None, draw=None) -> list[dict]:
    rows = []
    for i, (bidder, (sv, sb)) in enumerate(zip(profile.instance.bidders, profile.stated)):
        row = {
            "id": bidder.id,
            "value": _rat(bidder.value),
            "budget": _rat(bidder.budget),
            "stated_value": _rat(sv),
            "stated_budget": _rat(sb),
        }
        if outcome is not None:
            row["units"] = _rat(outcome.units[i])
            row["payment"] = _rat(outcome.payments[i])
        if draw is not None:
            row["realized_payment"] = _rat(draw.payments[i])
        rows.append(row)
    return rows


def _outcome_block(outcome: mechanism.Outcome) -> dict:
    block = {
        "mode": outcome.mode,
        "revenue": _rat(outcome.revenue),
        "revenue_excluding_dummy_tier": _rat(outcome.revenue_excluding_dummy_tier),
    }
    if outcome.cut is not None:
        block["cut"] = {
            "x": _rat(outcome.cut.x),
            "k": outcome.cut.k,
            "residual": _rat(outcome.cut.residual),
        }
    return block


def _check(name: str, ok: bool, witness=None) -> dict:
    entry = {"name": name, "ok": bool(ok)}
    if witness is not None:
        entry["witness"] = witness
    return entry


def _feasibility_checks(profile: BidProfile, outcome) -> list[dict]:
    sold = outcome.total_units()
    checks = [
        _check(
            "market-clearing",
            sold == outcome.supply,
            None if sold == outcome.supply
            else f"unsold units: {model.format_rational(outcome.supply - sold)}",
        )
    ]
    feasible = all(p <= b for p, b in zip(outcome.payments, outcome.stated_budgets))
    checks.append(_check("budget-feasible", feasible))
    return checks


def _pareto_check(name: str, report: analysis.ParetoReport) -> dict:
    witness = None
    if not report.is_pareto and report.witness is not None:
        if report.witness[0] == "unsold":
            witness = f"unsold units: {model.format_rational(report.witness[1])}"
        else:
            witness = (
                f"bidder #{report.witness[2]} allocated while higher-value "
                f"bidder #{report.witness[1]} retains usable budget"
            )
    return _check(name, report.is_pareto, witness)


def _cmd_solve(profile: BidProfile, args) -> dict:
    outcome = mechanism.allocate_divisible(profile, profile.instance.supply)
    report = _outcome_block(outcome)
    report["bidders"] = _bidder_rows(profile, outcome)
    checks = _feasibility_checks(profile, outcome)
    checks.append(_pareto_check("pareto-divisible", analysis.is_pareto_divisible(profile, outcome)))
    report["checks"] = checks
    return report


def _cmd_solve_indivisible(profile: BidProfile, args) -> dict:
    supply = profile.instance.supply
    if supply.denominator != 1:
        raise ValueError("indivisible mode needs an integer supply")
    try:
        outcome = mechanism.allocate_indivisible(profile, int(supply))
    except mechanism.IndivisibleClearingError as exc:
        return {
            "mode": "indivisible",
            "checks": [
                _check(
                    "indivisible-clearing",
                    False,
                    {
                        "x_low": _rat(exc.x_low),
                        "x_high": _rat(exc.x_high),
                        "units_low": list(exc.units_low),
                        "units_high": list(exc.units_high),
                    },
                )
            ],
        }
    report = _outcome_block(outcome)
    report["bidders"] = _bidder_rows(profile, outcome)
    checks = _feasibility_checks(profile, outcome)
    checks.append(_pareto_check("pareto-indivisible", analysis.is_pareto_indivisible(profile, outcome)))
    report["checks"] = checks
    return report


def _cmd_apa(profile: BidProfile, args) -> dict:
    result = clock.clearing_price(profile, profile.instance.supply)
    report = {
        "clearing_price": _rat(result.clearing_price),
        "r_star": _rat(result.r_star),
        "marginal_rank": result.marginal_index,
        "partial": result.partial,
    }
    report.update(_outcome_block(result.outcome))
    report["bidders"] = _bidder_rows(profile, result.outcome)
    checks = _feasibility_checks(profile, result.outcome)
    supply = profile.instance.supply
    checks.append(
        _check("revenue-identity", result.r_star == supply * result.clearing_price)
    )
    report["checks"] = checks
    return report


def _cmd_check_pareto(profile: BidProfile, args) -> dict:
    outcome = mechanism.allocate_divisible(profile, profile.instance.supply)
    report = _outcome_block(outcome)
    report["bidders"] = _bidder_rows(profile, outcome)
    report["checks"] = [
        _pareto_check("pareto-divisible", analysis.is_pareto_divisible(profile, outcome))
    ]
    return report


def _cmd_check_revenue(profile: BidProfile, args) -> dict:
    instance = profile.instance
    revenue, r_star, b_max = analysis.revenue_gap(instance, instance.supply)
    report = {
        "revenue": _rat(revenue),
        "r_star": _rat(r_star),
        "b_max": _rat(b_max),
    }
    report["checks"] = [
        _check("revenue-lower-bound", revenue >= r_star - b_max),
        _check("revenue-upper-bound", revenue <= r_star),
    ]
    return report


def _cmd_check_truthful(profile: BidProfile, args) -> dict:
    instance = profile.instance
    supply = instance.supply
    rows = []
    ok = True
    witness = None
    for i, bidder in enumerate(instance.bidders):
        if bidder.id == DUMMY_ID:
            continue
        grids = analysis.deviation_grids(instance, supply, i, args.grid_size, args.grid_size)
        rep = analysis.best_deviation(instance, supply, i, *grids)
        rows.append(
            {
                "bidder": bidder.id,
                "class": rep.deviation_class,
                "gain": _rat(rep.gain),
                "best_value": _rat(rep.best_deviation[0]),
                "best_budget": _rat(rep.best_deviation[1]),
            }
        )
        if rep.gain > 0 and rep.deviation_class in (
            "budget-under", "budget-over", "value-under",
        ):
            ok = False
            witness = rows[-1]
    return {
        "deviations": rows,
        "checks": [_check("semi-truthful", ok, witness)],
    }


def _cmd_dynamics(profile: BidProfile, args) -> dict:
    instance = profile.instance
    config = dynamics.DynamicsConfig(
        step=args.delta, max_rounds=args.max_rounds,
        record_every=max(1, args.max_rounds // 20),
    )
    trace = dynamics.run_dynamics(instance, instance.supply, config, initial=profile)
    final = trace.final_outcome
    report = {
        "converged": trace.converged,
        "activations": trace.rounds_used,
        "final_bids": [
            {"id": b.id, "stated_value": _rat(v)}
            for b, (v, _) in zip(instance.bidders, trace.final_profile.stated)
            if b.id != DUMMY_ID
        ],
        "final_revenue": _rat(final.revenue),
    }
    floor_ok = all(
        v >= instance.dummy_value for v, _ in trace.final_profile.stated
    )
    budgets_ok = all(
        sb == b.budget
        for b, (_, sb) in zip(instance.bidders, trace.final_profile.stated)
    )
    report["checks"] = [
        _check("bids-at-or-above-dummy", floor_ok),
        _check("budgets-fixed", budgets_ok),
    ]
    return report


def _cmd_lottery(profile: BidProfile, args) -> dict:
    outcome = mechanism.allocate_divisible(profile, profile.instance.supply)
    draw = mechanism.charge_lottery(outcome, args.seed)
    report = _outcome_block(outcome)
    report["seed"] = args.seed
    report["bidders"] = _bidder_rows(profile, outcome, draw)
    realized_ok = all(
        r <= b for r, b in zip(draw.payments, outcome.stated_budgets)
    )
    checks = _feasibility_checks(profile, outcome)
    checks.append(_check("realized-within-budget", realized_ok))
    report["checks"] = checks
    return report


_COMMANDS = {
    "solve": _cmd_solve,
    "solve-indivisible": _cmd_solve_indivisible,
    "apa": _cmd_apa,
    "check-pareto": _cmd_check_pareto,
    "check-revenue": _cmd_check_revenue,
    "check-truthful": _cmd_check_truthful,
    "dynamics": _cmd_dynamics,
    "lottery": _cmd_lottery,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sortcut",
        description="Exact solver and property checkers for budget-constrained "
        "multi-unit auctions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("instance", help="instance file (JSON)")
        cmd.add_argument("--seed", type=int, default=None, help="lottery seed (u64)")
        cmd.add_argument(
            "--delta", type=model.parse_rational, default=Fraction(1, 100),
            help="bid adjustment step for dynamics (rational)",
        )
        cmd.add_argument("--max-rounds", type=int, default=100_000)
        cmd.add_argument("--grid-size", type=int, default=25)
        cmd.add_argument("--json", action="store_true", help="emit a JSON report")
    return parser


def _render_text(report: dict, out) -> None:
    def line(key: str, value) -> None:
        print(f"{key}: {value}", file=out)

    for key, value in report.items():
        if key == "bidders":
            print("bidders:", file=out)
            for row in value:
                cells = [f"id={row['id']}"]
                for field in ("stated_value", "stated_budget", "units", "payment",
                              "realized_payment"):
                    if field in row:
                        cells.append(f"{field}={row[field]['exact']}")
                print("  " + "  ".join(cells), file=out)
        elif key == "checks":
            print("checks:", file=out)
            for check in value:
                status = "ok" if check["ok"] else "FAIL"
                extra = f"  witness: {check['witness']}" if "witness" in check else ""
                print(f"  {check['name']}: {status}{extra}", file=out)
        elif isinstance(value, dict) and set(value) == {"exact", "decimal"}:
            line(key, f"{value['exact']} ({value['decimal']})")
        elif key == "cut":
            line("cut", f"x={value['x']['exact']} ({value['x']['decimal']}), "
                        f"k={value['k']}, residual={value['residual']['exact']}")
        elif key in ("deviations", "final_bids"):
            print(f"{key}:", file=out)
            for row in value:
                print("  " + json.dumps(row), file=out)
        else:
            line(key, value)


def run_command(argv: list[str]) -> tuple[int, dict]:
    """Parse arguments, run a subcommand, and return (exit code, report)."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (2 if exc.code not in (0, None) else 0), {}

    if args.seed is None:
        env_seed = os.environ.get("SORTCUT_SEED")
        args.seed = int(env_seed) if env_seed else 0
    if not 0 <= args.seed < 2**64:
        print("error: seed must be a 64-bit unsigned integer", file=sys.stderr)
        return 2, {}

    try:
        profile = parse_instance(args.instance)
        body = _COMMANDS[args.command](profile, args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, {"error": str(exc)}

    report = {"command": args.command, "instance": args.instance}
    report.update(body)
    checks = report.get("checks", [])
    ok = all(c["ok"] for c in checks)
    report["status"] = "ok" if ok else "failed-checks"

    if args.json:
        print(json.dumps(report, indent=2))
    else:
        _render_text(report, sys.stdout)
    return (0 if ok else 1), report


def main(argv: list[str] | None = None) -> int:
    code, _ = run_command(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
