"""Exact solver and verification suite for arctic-auction market equilibria."""

from .balanced import balanced_flow, balanced_surplus, potential, surplus, verify_property1
from .costmarket import (
    CostMarketInstance,
    CostSolution,
    generate_random_cost_instance,
    parse_cost_instance,
    profit,
    solve_cost_market,
)
from .flownet import (
    Cut,
    Flow,
    FlowNetwork,
    MaxflowCounter,
    build_network,
    check_invariant,
    max_flow,
    maximal_min_cut,
    min_cut_source_side,
    residual_reachable,
)
from .kkt import KktReport, verify_arctic_kkt, verify_cost_kkt, verify_market_clearing
from .market import (
    Equilibrium,
    MarketFormatError,
    MarketInstance,
    RunStats,
    generate_random_instance,
    parse_equilibrium,
    parse_instance,
    serialize_equilibrium,
    serialize_instance,
    validate_instance,
)
from .oracle import (
    OracleError,
    OracleSizeError,
    numeric_objective,
    oracle_balanced_surplus,
    oracle_cost_solve,
    oracle_solve,
)
from .solver import (
    Event,
    PhaseOutcome,
    SolverError,
    SolverState,
    TraceRecorder,
    apply_money_return,
    apply_new_edge,
    apply_tight_set,
    apply_z_events,
    begin_phase,
    initialize,
    mbpb,
    next_event,
    run_phase,
    solve,
)

__all__ = [
    "CostMarketInstance",
    "CostSolution",
    "Cut",
    "Equilibrium",
    "Event",
    "Flow",
    "FlowNetwork",
    "KktReport",
    "MarketFormatError",
    "MarketInstance",
    "MaxflowCounter",
    "OracleError",
    "OracleSizeError",
    "PhaseOutcome",
    "RunStats",
    "SolverError",
    "SolverState",
    "TraceRecorder",
    "apply_money_return",
    "apply_new_edge",
    "apply_tight_set",
    "apply_z_events",
    "balanced_flow",
    "begin_phase",
    "next_event",
    "run_phase",
    "balanced_surplus",
    "build_network",
    "check_invariant",
    "generate_random_cost_instance",
    "generate_random_instance",
    "initialize",
    "max_flow",
    "maximal_min_cut",
    "mbpb",
    "min_cut_source_side",
    "numeric_objective",
    "oracle_balanced_surplus",
    "oracle_cost_solve",
    "oracle_solve",
    "parse_cost_instance",
    "parse_equilibrium",
    "parse_instance",
    "potential",
    "profit",
    "residual_reachable",
    "serialize_equilibrium",
    "serialize_instance",
    "solve",
    "solve_cost_market",
    "surplus",
    "validate_instance",
    "verify_arctic_kkt",
    "verify_cost_kkt",
    "verify_market_clearing",
    "verify_property1",
]
