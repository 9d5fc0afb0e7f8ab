"""Exact-arithmetic engine for multi-unit auctions with hard budget limits."""

from .model import (
    DUMMY_ID,
    BidProfile,
    Bidder,
    Instance,
    NormalizationError,
    format_rational,
    is_normalized,
    normalize,
    parse_rational,
    validate,
)
from .mechanism import (
    ChargeDraw,
    CutPoint,
    IndivisibleClearingError,
    NoClearingError,
    Outcome,
    PriceLadder,
    allocate_divisible,
    allocate_indivisible,
    bidder_allocation,
    charge_lottery,
    clear,
    cut_shift,
    demand_at,
    indivisible_allocation_at,
    ladder_for,
)
from .clock import ClockResult, apa_allocate, clearing_price
from .analysis import (
    BOTTOM,
    DeviationReport,
    ParetoReport,
    best_deviation,
    bidder_utility,
    deviation_grids,
    is_equilibrium,
    is_pareto_divisible,
    is_pareto_indivisible,
    revenue_gap,
)
from .dynamics import DynamicsConfig, DynamicsTrace, TracePoint, greedy_step, run_dynamics

__all__ = [
    "DUMMY_ID",
    "BOTTOM",
    "Bidder",
    "BidProfile",
    "ChargeDraw",
    "ClockResult",
    "CutPoint",
    "DeviationReport",
    "DynamicsConfig",
    "DynamicsTrace",
    "Instance",
    "IndivisibleClearingError",
    "NoClearingError",
    "NormalizationError",
    "Outcome",
    "ParetoReport",
    "PriceLadder",
    "TracePoint",
    "allocate_divisible",
    "allocate_indivisible",
    "apa_allocate",
    "best_deviation",
    "bidder_allocation",
    "bidder_utility",
    "charge_lottery",
    "clear",
    "clearing_price",
    "cut_shift",
    "demand_at",
    "deviation_grids",
    "format_rational",
    "greedy_step",
    "indivisible_allocation_at",
    "is_equilibrium",
    "is_normalized",
    "is_pareto_divisible",
    "is_pareto_indivisible",
    "ladder_for",
    "normalize",
    "parse_rational",
    "revenue_gap",
    "run_dynamics",
    "validate",
]

__version__ = "0.1.0"
