"""Primal-dual equilibrium solver for arctic-auction markets.

The solver maintains prices p and returned money r such that ({s}, rest) is
always a minimum cut of the money network: prices never overshoot their
equilibrium values and only ever rise.  A run is a sequence of phases; each
phase scales up the prices of the goods demanded by the maximum-surplus
buyers until an event fires:

* a new bang-per-buck edge appears (the iteration restarts with a larger
  active set),
* a set of goods becomes exactly affordable by its interested buyers
  ("tight"; the phase ends, or the run terminates if every good is tight),
* an active buyer's bang-per-buck reaches 1 and money is returned to her
  (fully, removing her, or partially, leaving a tight set behind),
* a zero-degree buyer reaches bang-per-buck 1 (full refund) or picks up an
  edge to an unscaled good.

Everything is exact rational arithmetic; every comparison is exact.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .balanced import balanced_flow, potential, surplus
from .flownet import (
    FlowNetwork,
    MaxflowCounter,
    max_flow,
    maximal_min_cut,
    mbpb_edges,
    min_cut_source_side,
    residual_reachable,
)
from .market import (
    Equilibrium,
    MarketInstance,
    RunStats,
    equilibrium_for_instance,
    instance_bit_bounds,
    validate_instance,
)


class SolverError(RuntimeError):
    """An internal contract of the algorithm was violated; indicates a bug."""


EVENT_PRIORITY = {
    "money_return": 0,
    "z_removal": 1,
    "tight_set": 2,
    "z_new_edge": 3,
    "new_edge": 4,
}


@dataclass(frozen=True)
class Event:
    kind: str
    theta_star: Fraction
    buyer: int | None = None
    good: int | None = None
    tight_goods: frozenset[int] | None = None

    def sort_key(self):
        return (
            self.theta_star,
            EVENT_PRIORITY[self.kind],
            self.buyer if self.buyer is not None else -1,
            self.good if self.good is not None else -1,
        )


@dataclass
class PhaseOutcome:
    type: str  # "I" | "II" | "III"
    potential_before: Fraction
    potential_after: Fraction | None
    detail: Event | None
    terminal: bool = False


class TraceRecorder:
    """Optional hook collecting event rows and phase-boundary snapshots."""

    def __init__(self):
        self.events: list[dict] = []
        self.phases: list[dict] = []

    def record_event(self, state: "SolverState", event: Event) -> None:
        prices = dict(state.prices)
        alphas = {
            i: max(state.inst.utilities[i][j] / prices[j] for j in state.inst.goods)
            for i in state.inst.buyers
        }
        self.events.append(
            {
                "phase": state.phase_index,
                "iteration": state.iteration_index,
                "kind": event.kind,
                "theta_star": event.theta_star,
                "phi": state.phi,
                "I_size": len(state.I),
                "J_size": len(state.J),
                "Z_size": len(state.Z),
                "prices": prices,
                "alphas": alphas,
            }
        )

    def record_phase(self, state: "SolverState", label: str) -> None:
        self.phases.append(
            {
                "label": label,
                "phase": state.phase_index,
                "prices": dict(state.prices),
                "returns": dict(state.returns),
                "edges": frozenset(state.edges),
                "live_buyers": frozenset(state.live_buyers),
                "live_goods": frozenset(state.live_goods),
                "phi": state.phi,
            }
        )


@dataclass
class SolverState:
    inst: MarketInstance
    live_buyers: set[int]
    live_goods: set[int]
    prices: dict[int, Fraction]
    returns: dict[int, Fraction]
    edges: set[tuple[int, int]]
    I: set[int] = field(default_factory=set)
    J: set[int] = field(default_factory=set)
    Z: set[int] = field(default_factory=set)
    base_prices: dict[int, Fraction] = field(default_factory=dict)
    theta: Fraction = Fraction(1)
    phi: Fraction = Fraction(0)
    stats: RunStats = field(default_factory=RunStats)
    counter: MaxflowCounter = field(default_factory=MaxflowCounter)
    phase_index: int = 0
    iteration_index: int = 0
    recorder: TraceRecorder | None = None

    def leftover(self, i: int) -> Fraction:
        return self.inst.money[i] - self.returns[i]


def mbpb(inst: MarketInstance, prices: dict[int, Fraction], i: int):
    """Best utility-to-price ratio of buyer i and the goods attaining it."""
    ratios = {j: inst.utilities[i][j] / prices[j] for j in prices}
    alpha = max(ratios.values())
    return alpha, {j for j, v in ratios.items() if v == alpha}


def _network(state: SolverState, theta: Fraction | None = None, zero_buyer: int | None = None) -> FlowNetwork:
    prices = {}
    for j in state.live_goods:
        if theta is not None and j in state.J:
            prices[j] = state.base_prices[j] * theta
        else:
            prices[j] = state.prices[j]
    sink_caps = {}
    for i in state.live_buyers:
        sink_caps[i] = Fraction(0) if i == zero_buyer else state.leftover(i)
    return FlowNetwork(
        goods=tuple(sorted(state.live_goods)),
        buyers=tuple(sorted(state.live_buyers)),
        source_caps=prices,
        sink_caps=sink_caps,
        edges=frozenset(state.edges),
    )


def _invariant_holds(state: SolverState, theta: Fraction | None = None, zero_buyer: int | None = None) -> bool:
    net = _network(state, theta=theta, zero_buyer=zero_buyer)
    return max_flow(net, state.counter).value == net.total_price


def _require_invariant(state: SolverState, where: str) -> None:
    if not _invariant_holds(state):
        raise SolverError(f"price cut invariant broken at {where}")


def initialize(inst: MarketInstance) -> SolverState:
    """Set starting prices, zero returns, and the initial network.

    Prices start uniform at the largest value that keeps every buyer's
    bang-per-buck at least 1 while the total price stays within the
    smallest budget; goods nobody demands at that price are then repriced
    to the highest indifference point so every good has an edge.
    """
    report = validate_instance(inst)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.violations))
    min_money = min(inst.money)
    m = inst.n_goods
    min_best_utility = min(max(row) for row in inst.utilities)
    p0 = min(min_money / m, min_best_utility)
    prices = {j: p0 for j in inst.goods}
    alphas = {i: max(inst.utilities[i][j] for j in inst.goods) / p0 for i in inst.buyers}
    edges = set(mbpb_edges(inst, prices, inst.buyers, inst.goods))
    covered = {j for (j, _) in edges}
    for j in inst.goods:
        if j not in covered:
            prices[j] = max(inst.utilities[i][j] / alphas[i] for i in inst.buyers)
    edges = set(mbpb_edges(inst, prices, inst.buyers, inst.goods))
    if {j for (j, _) in edges} != set(inst.goods):
        raise SolverError("repricing left a good without an edge")

    min_m, total_m, max_u, bits = instance_bit_bounds(inst)
    stats = RunStats(
        min_money=min_m, total_money=total_m, max_utility=max_u, input_bits=bits
    )
    state = SolverState(
        inst=inst,
        live_buyers=set(inst.buyers),
        live_goods=set(inst.goods),
        prices=prices,
        returns={i: Fraction(0) for i in inst.buyers},
        edges=edges,
        stats=stats,
    )
    _require_invariant(state, "initialization")
    return state


def _neighborhood(state: SolverState, buyers: set[int]) -> set[int]:
    return {j for (j, i) in state.edges if i in buyers}


def _start_iteration(state: SolverState) -> None:
    """Recompute the active goods, prune inactive edges, refresh Z and bases."""
    state.J = _neighborhood(state, state.I)
    state.edges = {
        (j, i) for (j, i) in state.edges if j not in state.J or i in state.I
    }
    with_edges = {i for (_, i) in state.edges}
    state.Z = {i for i in state.live_buyers - state.I if i not in with_edges}
    state.base_prices = {j: state.prices[j] for j in state.J}
    state.theta = Fraction(1)
    state.iteration_index += 1


def begin_phase(state: SolverState) -> tuple[Fraction, bool]:
    """Open a phase: rebuild the network, balance flow, pick the active sets.

    Returns (potential at phase start, terminal flag).  The terminal flag is
    set when every buyer's surplus is already zero, in which case the full
    goods set is tight and the run ends.
    """
    state.phase_index += 1
    state.iteration_index = 0
    prices = {j: state.prices[j] for j in state.live_goods}
    state.edges = set(
        mbpb_edges(state.inst, prices, state.live_buyers, state.live_goods)
    )
    net = _network(state)
    f = balanced_flow(net, state.counter)
    gamma = surplus(net, f)
    state.phi = potential(gamma)
    if state.recorder is not None:
        state.recorder.record_phase(state, "phase_start")
    _require_invariant(state, f"phase {state.phase_index} start")
    delta = max(gamma.values())
    if delta == 0:
        state.I = set()
        state.J = set()
        state.Z = set()
        state.theta = Fraction(1)
        return state.phi, True
    state.I = {i for i, g in gamma.items() if g == delta}
    _start_iteration(state)
    return state.phi, False


def _alpha_bar_active(state: SolverState, i: int) -> Fraction:
    """Bang-per-buck of an active buyer at iteration-start prices.

    All of an active buyer's edges are best-ratio ties inside the scaled
    set; anything else is a maintenance bug.
    """
    ratios = {
        state.inst.utilities[i][j] / state.base_prices[j]
        for (j, b) in state.edges
        if b == i
    }
    if not ratios:
        raise SolverError(f"active buyer {i} has no edges")
    if len(ratios) != 1:
        raise SolverError(f"active buyer {i} has unequal edge ratios")
    return next(iter(ratios))


def _alpha_bar_zero_degree(state: SolverState, i: int) -> Fraction:
    """Bang-per-buck of a zero-degree buyer; attained inside the scaled set."""
    return max(
        state.inst.utilities[i][j] / state.base_prices[j] for j in state.J
    )


def _tight_set_search(state: SolverState, theta_cap: Fraction):
    """Earliest theta <= theta_cap at which some scaled goods set goes tight.

    Probes the invariant at a candidate theta; a violated min cut yields the
    exact tightness point of its scaled goods, which becomes the next
    candidate.  Goods sets that were already tight before this iteration and
    contain no scaled good never change worth and are ignored.
    """
    theta_hi = theta_cap
    for _ in range(100000):
        net = _network(state, theta=theta_hi)
        f = max_flow(net, state.counter)
        if f.value == net.total_price:
            cut = maximal_min_cut(net, f)
            tight_goods = set(cut.goods_part())
            if tight_goods & state.J:
                return theta_hi, frozenset(tight_goods)
            return None
        cut = min_cut_source_side(net, f)
        violated = set(cut.goods_part()) & state.J
        if not violated:
            raise SolverError("invariant violation without scaled goods")
        interested = {i for (j, i) in state.edges if j in violated}
        worth_buyers = sum((state.leftover(i) for i in interested), Fraction(0))
        base = sum((state.base_prices[j] for j in violated), Fraction(0))
        theta_v = worth_buyers / base
        if not (state.theta <= theta_v < theta_hi):
            raise SolverError("tight set candidate out of range")
        theta_hi = theta_v
    raise SolverError("tight set search failed to settle")


def _refund_probe(state: SolverState, theta: Fraction, i: int):
    """Would-be refund for buyer i at theta: (amount, full?).

    With i's left-over money zeroed, either the cut stays minimal (full
    refund) or the maximal min cut fixes the partial amount that restores
    it.
    """
    net0 = _network(state, theta=theta, zero_buyer=i)
    f0 = max_flow(net0, state.counter)
    leftover = state.leftover(i)
    if f0.value == net0.total_price:
        return leftover, True
    cut = maximal_min_cut(net0, f0)
    S = set(cut.goods_part())
    T = set(cut.buyers_part())
    if i not in T:
        raise SolverError("returning buyer missing from the maximal min cut")
    worth_s = sum((net0.source_caps[j] for j in S), Fraction(0))
    worth_t = sum((state.leftover(b) for b in T if b != i), Fraction(0))
    return leftover - (worth_s - worth_t), False


def next_event(state: SolverState) -> Event:
    """The earliest event as theta rises; deterministic tie-breaking.

    Ties at equal theta resolve by kind (refunds precede everything: prices
    cannot rise past an unpaid buyer).  Among simultaneous money returns,
    full refunds go first (removing a buyer is the strongest progress),
    then larger amounts, then the highest buyer index; this usually lands
    on the same optimum corner the sign-pattern oracle selects when refund
    splits are degenerate, though not always (the split is not unique).
    """
    candidates: list[Event] = []
    for i in sorted(state.I):
        abar = _alpha_bar_active(state, i)
        if abar < state.theta:
            raise SolverError(f"active buyer {i} has bang-per-buck below 1")
        candidates.append(Event("money_return", abar, buyer=i))
        for j in sorted(state.live_goods - state.J):
            u = state.inst.utilities[i][j]
            if u > 0:
                candidates.append(
                    Event("new_edge", abar * state.prices[j] / u, buyer=i, good=j)
                )
    for i in sorted(state.Z):
        abar = _alpha_bar_zero_degree(state, i)
        if abar < state.theta:
            raise SolverError(f"zero-degree buyer {i} has bang-per-buck below 1")
        candidates.append(Event("z_removal", abar, buyer=i))
        for j in sorted(state.live_goods - state.J):
            u = state.inst.utilities[i][j]
            if u > 0:
                candidates.append(
                    Event("z_new_edge", abar * state.prices[j] / u, buyer=i, good=j)
                )
    if not candidates:
        raise SolverError("no candidate events in iteration")
    for ev in candidates:
        if ev.theta_star < state.theta:
            raise SolverError(f"{ev.kind} event in the past: {ev.theta_star} < {state.theta}")
    theta_cap = min(ev.theta_star for ev in candidates)
    found = _tight_set_search(state, theta_cap)
    if found is not None:
        theta_t, tight = found
        candidates.append(Event("tight_set", theta_t, tight_goods=tight))
    theta_min = min(ev.theta_star for ev in candidates)
    at_min = [ev for ev in candidates if ev.theta_star == theta_min]
    kind = min(at_min, key=lambda ev: EVENT_PRIORITY[ev.kind]).kind
    tied = [ev for ev in at_min if ev.kind == kind]
    if kind == "money_return" and len(tied) > 1:
        probes = {
            ev.buyer: _refund_probe(state, theta_min, ev.buyer) for ev in tied
        }
        return max(
            tied,
            key=lambda ev: (
                probes[ev.buyer][1],
                probes[ev.buyer][0],
                ev.buyer,
            ),
        )
    if kind == "z_removal" and len(tied) > 1:
        return max(tied, key=lambda ev: (state.leftover(ev.buyer), ev.buyer))
    return min(tied, key=Event.sort_key)


def _set_theta(state: SolverState, theta: Fraction) -> None:
    if theta < state.theta:
        raise SolverError("theta may only rise within an iteration")
    for j in state.J:
        state.prices[j] = state.base_prices[j] * theta
    state.theta = theta


def apply_new_edge(state: SolverState, i: int, j: int) -> SolverState:
    """Add the crossing edge and absorb residually-connected buyers."""
    u = state.inst.utilities[i][j]
    alpha_i = _alpha_bar_active(state, i) / state.theta
    if u != alpha_i * state.prices[j]:
        raise SolverError("new edge does not satisfy the bang-per-buck equality")
    state.edges.add((j, i))
    net = _network(state)
    f = balanced_flow(net, state.counter)
    new_phi = potential(surplus(net, f))
    if new_phi > state.phi:
        raise SolverError("potential increased across a balanced-flow recompute")
    state.phi = new_phi
    absorbed = residual_reachable(net, f, state.I)
    state.I |= absorbed
    _start_iteration(state)
    return state


def apply_tight_set(state: SolverState, S: frozenset[int]):
    """End the phase on a tight set; terminal when every good is tight.

    Every good being tight ends the run only when no zero-degree buyer
    still holds money: such a buyer regains her bang-per-buck edges at the
    next rebuild, which reopens price slack, so the run must continue.
    """
    worth_s = sum((state.prices[j] for j in S), Fraction(0))
    interested = {i for (j, i) in state.edges if j in S}
    worth_neighbors = sum((state.leftover(i) for i in interested), Fraction(0))
    if worth_s != worth_neighbors:
        raise SolverError("tight set is not exactly tight")
    if S == state.live_goods and not state.Z:
        return "terminal"
    return "phase_end"


def apply_money_return(state: SolverState, i: int) -> str:
    """Return money to buyer i whose bang-per-buck reached exactly 1.

    Full return removes the buyer (the cut stays minimal without her money);
    otherwise the maximal min cut determines the partial refund that makes
    the cut minimal again, leaving its goods side tight.
    """
    abar = _alpha_bar_active(state, i)
    if abar != state.theta:
        raise SolverError("money return fired away from bang-per-buck 1")
    net0 = _network(state, zero_buyer=i)
    f0 = max_flow(net0, state.counter)
    if f0.value == net0.total_price:
        state.returns[i] = state.inst.money[i]
        _remove_buyer(state, i)
        _require_invariant(state, "full money return")
        return "II"
    cut = maximal_min_cut(net0, f0)
    S = set(cut.goods_part())
    T = set(cut.buyers_part())
    if i not in T:
        raise SolverError("returning buyer missing from the maximal min cut")
    worth_s = sum((state.prices[j] for j in S), Fraction(0))
    worth_t = sum((state.leftover(b) for b in T if b != i), Fraction(0))
    beta = worth_s - worth_t
    if not (0 < beta <= state.leftover(i)):
        raise SolverError("partial return outside the feasible range")
    new_return = state.inst.money[i] - beta
    if new_return < state.returns[i]:
        raise SolverError("returned money would decrease")
    state.returns[i] = new_return
    _require_invariant(state, "partial money return")
    return "III"


def _remove_buyer(state: SolverState, i: int) -> None:
    state.live_buyers.discard(i)
    state.I.discard(i)
    state.Z.discard(i)
    state.edges = {(j, b) for (j, b) in state.edges if b != i}


def apply_z_events(state: SolverState, event: Event) -> SolverState:
    """Handle zero-degree buyer events; theta keeps rising afterwards."""
    i = event.buyer
    if i not in state.Z:
        raise SolverError(f"buyer {i} is not zero-degree")
    if event.kind == "z_removal":
        if _alpha_bar_zero_degree(state, i) != state.theta:
            raise SolverError("zero-degree removal fired away from bang-per-buck 1")
        state.returns[i] = state.inst.money[i]
        _remove_buyer(state, i)
    elif event.kind == "z_new_edge":
        j = event.good
        u = state.inst.utilities[i][j]
        alpha_i = _alpha_bar_zero_degree(state, i) / state.theta
        if u != alpha_i * state.prices[j]:
            raise SolverError("zero-degree crossing does not satisfy the equality")
        state.edges.add((j, i))
        state.Z.discard(i)
    else:
        raise SolverError(f"not a zero-degree event: {event.kind}")
    return state


def run_phase(state: SolverState) -> PhaseOutcome:
    """Run one phase to its ending event; assumes begin_phase was not terminal."""
    phi_start = state.phi
    n_goods = state.inst.n_goods
    n_buyers = state.inst.n_buyers
    max_events = 10 * (n_buyers + 2) * (n_goods + 2)
    for _ in range(max_events):
        ev = next_event(state)
        _set_theta(state, ev.theta_star)
        if state.recorder is not None:
            state.recorder.record_event(state, ev)
        if ev.kind == "new_edge":
            if state.iteration_index > n_goods + 2:
                raise SolverError("iteration count exceeded the goods bound")
            apply_new_edge(state, ev.buyer, ev.good)
        elif ev.kind in ("z_removal", "z_new_edge"):
            apply_z_events(state, ev)
            _require_invariant(state, f"after {ev.kind}")
        elif ev.kind == "money_return":
            kind = apply_money_return(state, ev.buyer)
            return PhaseOutcome(kind, phi_start, None, ev)
        elif ev.kind == "tight_set":
            _require_invariant(state, "tight set event")
            result = apply_tight_set(state, ev.tight_goods)
            return PhaseOutcome(
                "I", phi_start, None, ev, terminal=(result == "terminal")
            )
    raise SolverError("event budget exceeded within a phase")


def _phase_cap(inst: MarketInstance) -> int:
    """Runaway guard: a generous multiple of the polynomial phase bound."""
    n = inst.n_buyers
    _, total_m, max_u, _ = instance_bit_bounds(inst)
    bound = 64 * n**3 * (
        math.log2(n) + n * math.log2(float(max_u) + 2) + math.log2(float(total_m) + 2)
    )
    return 4 * (int(bound) + 16)


def _extract(state: SolverState) -> Equilibrium:
    net = _network(state)
    f = max_flow(net, state.counter)
    if f.value != net.total_price or f.value != net.total_money:
        raise SolverError("terminal network is not saturated on both sides")
    inst = state.inst
    allocation = []
    for i in inst.buyers:
        row = []
        for j in inst.goods:
            if i in state.live_buyers:
                row.append(f.on(("g", j), ("b", i)) / state.prices[j])
            else:
                row.append(Fraction(0))
        allocation.append(tuple(row))
    prices = tuple(state.prices[j] for j in inst.goods)
    returned = tuple(state.returns[i] for i in inst.buyers)
    return equilibrium_for_instance(inst, prices, tuple(allocation), returned)


def solve(inst: MarketInstance, recorder: TraceRecorder | None = None) -> tuple[Equilibrium, RunStats]:
    """Compute an exact equilibrium: prices, allocation and returned money."""
    state = initialize(inst)
    state.recorder = recorder
    stats = state.stats
    phase_cap = _phase_cap(inst)
    pending: tuple[int, int, Fraction, str] | None = None
    while True:
        if state.phase_index > phase_cap:
            raise SolverError("phase budget exceeded; runtime bound violated")
        n_live = len(state.live_buyers)
        phi_before, terminal = begin_phase(state)
        if pending is not None:
            idx, n_prev, phi_prev, kind = pending
            stats.potential_trace.append((idx, n_prev, phi_prev, phi_before, kind))
            pending = None
        if terminal:
            stats.phase_count += 1
            stats.type1 += 1
            stats.potential_trace.append(
                (state.phase_index, n_live, phi_before, Fraction(0), "I")
            )
            if state.recorder is not None:
                state.recorder.record_event(
                    state,
                    Event(
                        "tight_set",
                        Fraction(1),
                        tight_goods=frozenset(state.live_goods),
                    ),
                )
            break
        outcome = run_phase(state)
        stats.phase_count += 1
        if outcome.type == "I":
            stats.type1 += 1
        elif outcome.type == "II":
            stats.type2 += 1
        else:
            stats.type3 += 1
        if outcome.terminal:
            stats.potential_trace.append(
                (state.phase_index, n_live, phi_before, Fraction(0), outcome.type)
            )
            break
        pending = (state.phase_index, n_live, phi_before, outcome.type)

    if state.recorder is not None:
        state.recorder.record_phase(state, "terminal")
    eq = _extract(state)
    stats.maxflow_calls = state.counter.calls
    denoms = [p.denominator for p in eq.prices]
    denoms += [x.denominator for row in eq.allocation for x in row]
    denoms += [s.denominator for s in eq.returned]
    stats.output_max_denominator = max(denoms)
    if not state.live_buyers:
        stats.note = "all buyers removed before a full tight set"
    return eq, stats


def prices_hash(prices: dict[int, Fraction]) -> str:
    blob = ",".join(f"{j}:{prices[j]}" for j in sorted(prices))
    return hashlib.sha1(blob.encode()).hexdigest()[:12]
