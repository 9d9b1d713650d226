"""Independent ground truth for small instances.

Three separate engines cross-check the main machinery:

* oracle_solve guesses the sign pattern of an optimum (which allocations and
  refunds are strictly positive), solves the induced square linear system in
  reciprocal prices exactly, and keeps the first guess that survives a full
  exact optimality check.  A float pass cheaply discards hopeless guesses
  before any exact work.
* oracle_balanced_surplus minimizes the l2 norm of the surplus vector by
  brute-force maximization of the deficiency bound over buyer subsets,
  without running any max-flow.
* oracle_cost_solve enumerates per-buyer sign patterns of the production
  market at cost prices and keeps the revenue-maximal pattern passing the
  exact check.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .costmarket import CostMarketInstance, CostSolution
from .flownet import FlowNetwork
from .kkt import verify_arctic_kkt, verify_cost_kkt, verify_market_clearing
from .market import Equilibrium, MarketInstance, equilibrium_for_instance

ZERO = Fraction(0)
ONE = Fraction(1)


class OracleError(RuntimeError):
    """No sign pattern produced a verified solution; should never happen."""


class OracleSizeError(ValueError):
    """Instance exceeds the enumeration guard."""


@dataclass(frozen=True)
class OracleResult:
    equilibrium: Equilibrium
    support_x: tuple[tuple[int, int], ...]
    support_s: tuple[int, ...]


def solve_linear(rows: list[list[Fraction]], rhs: list[Fraction]):
    """Exact Gaussian elimination; returns None when the system is singular."""
    n = len(rows)
    a = [list(row) + [rhs[k]] for k, row in enumerate(rows)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if a[r][col] != 0:
                piv = r
                break
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col]
        for r in range(col + 1, n):
            if a[r][col] == 0:
                continue
            factor = a[r][col] / inv
            for c in range(col, n + 1):
                a[r][c] -= factor * a[col][c]
    out = [ZERO] * n
    for r in range(n - 1, -1, -1):
        acc = a[r][n]
        for c in range(r + 1, n):
            acc -= a[r][c] * out[c]
        out[r] = acc / a[r][r]
    return out


def _ratio_consistent(inst: MarketInstance, K) -> bool:
    """A sign pattern forces price ratios along shared buyers; reject clashes."""
    parent: dict[int, int] = {}
    weight: dict[int, Fraction] = {}  # p_j / p_parent[j]

    def find(j):
        if parent.get(j, j) == j:
            parent.setdefault(j, j)
            weight.setdefault(j, ONE)
            return j, ONE
        root, w = find(parent[j])
        parent[j] = root
        weight[j] = weight[j] * w
        return root, weight[j]

    by_buyer: dict[int, list[int]] = {}
    for i, j in K:
        by_buyer.setdefault(i, []).append(j)
    for i, goods in by_buyer.items():
        j0 = goods[0]
        for j in goods[1:]:
            # u_ij / p_j = u_ij0 / p_j0  =>  p_j / p_j0 = u_ij / u_ij0
            ratio = inst.utilities[i][j] / inst.utilities[i][j0]
            r0, w0 = find(j0)
            r1, w1 = find(j)
            if r0 == r1:
                if w1 != w0 * ratio:
                    return False
            else:
                parent[r1] = r0
                weight[r1] = w0 * ratio / w1
    return True


def _build_system(inst: MarketInstance, K, L):
    """Square linear system over (q_j, x_K, s_L); q_j stands for 1/p_j."""
    m = inst.n_goods
    k, l = len(K), len(L)
    size = m + k + l
    x_index = {pair: m + idx for idx, pair in enumerate(K)}
    s_index = {i: m + k + idx for idx, i in enumerate(L)}
    rows = [[ZERO] * size for _ in range(size)]
    rhs = [ZERO] * size
    for j in range(m):
        for (i, jj) in K:
            if jj == j:
                rows[j][x_index[(i, jj)]] = ONE
        rhs[j] = ONE
    for r, (i, j) in enumerate(K, start=m):
        rows[r][j] = inst.utilities[i][j] * inst.money[i]
        for (ii, jj) in K:
            if ii == i:
                rows[r][x_index[(ii, jj)]] -= inst.utilities[i][jj]
        if i in s_index:
            rows[r][s_index[i]] -= ONE
        rhs[r] = ZERO
    for r, i in enumerate(L, start=m + k):
        for (ii, jj) in K:
            if ii == i:
                rows[r][x_index[(ii, jj)]] = inst.utilities[i][jj]
        rows[r][s_index[i]] = ONE
        rhs[r] = inst.money[i]
    return rows, rhs


def _float_screen(inst: MarketInstance, K, L, rows, rhs, tol=1e-6) -> bool:
    """Cheap approximate solve; keep only plausibly feasible patterns."""
    a = np.array([[float(v) for v in row] for row in rows])
    b = np.array([float(v) for v in rhs])
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return True  # let the exact path decide singularity
    if not np.all(np.isfinite(sol)):
        return True
    m = inst.n_goods
    q = sol[:m]
    if np.any(q < tol):
        return False
    x = {pair: sol[m + idx] for idx, pair in enumerate(K)}
    s = {i: sol[m + len(K) + idx] for idx, i in enumerate(L)}
    if any(v < -tol for v in x.values()) or any(v < -tol for v in s.values()):
        return False
    p = 1.0 / q
    for i in inst.buyers:
        w = sum(float(inst.utilities[i][j]) * x.get((i, j), 0.0) for j in inst.goods)
        t = w + s.get(i, 0.0)
        mi = float(inst.money[i])
        if t < mi - tol:  # dual ratio with lambda = 1 needs w + s >= m
            return False
        for j in inst.goods:
            if float(inst.utilities[i][j]) * mi > t * p[j] + tol * 100:
                return False
    return True


def _exact_candidate(inst: MarketInstance, K, L):
    rows, rhs = _build_system(inst, K, L)
    sol = solve_linear(rows, rhs)
    if sol is None:
        return None
    m = inst.n_goods
    q = sol[:m]
    if any(v <= 0 for v in q):
        return None
    prices = tuple(1 / v for v in q)
    x = [[ZERO] * m for _ in inst.buyers]
    for idx, (i, j) in enumerate(K):
        x[i][j] = sol[m + idx]
    s = [ZERO] * inst.n_buyers
    for idx, i in enumerate(L):
        s[i] = sol[m + len(K) + idx]
    if any(v < 0 for row in x for v in row) or any(v < 0 for v in s):
        return None
    eq = equilibrium_for_instance(
        inst, prices, tuple(tuple(row) for row in x), tuple(s)
    )
    if not verify_arctic_kkt(inst, eq).overall:
        return None
    if not verify_market_clearing(inst, eq).overall:
        return None
    return eq


def oracle_solve(inst: MarketInstance, size_guard: int = 4, use_screen: bool = True) -> OracleResult:
    """Exact equilibrium by sign-pattern enumeration, smallest patterns first.

    All patterns of the first successful total size are evaluated; their
    price vectors must agree exactly (a clash would disprove optimum
    uniqueness and is treated as a hard failure).
    """
    n, m = inst.n_buyers, inst.n_goods
    if n > size_guard or m > size_guard:
        raise OracleSizeError(f"instance {n}x{m} exceeds the {size_guard} guard")
    pairs = [
        (i, j) for i in inst.buyers for j in inst.goods if inst.utilities[i][j] > 0
    ]
    all_buyers = frozenset(inst.buyers)
    all_goods = frozenset(inst.goods)

    for total in range(m, len(pairs) + n + 1):
        tier: list[tuple[Equilibrium, tuple, tuple]] = []
        for k in range(m, min(len(pairs), total) + 1):
            l = total - k
            if not 0 <= l <= n:
                continue
            for K in itertools.combinations(pairs, k):
                if {j for (_, j) in K} != all_goods:
                    continue
                covered = {i for (i, _) in K}
                mandatory = all_buyers - covered
                if len(mandatory) > l:
                    continue
                if not _ratio_consistent(inst, K):
                    continue
                rows_cache = None
                for L in itertools.combinations(sorted(all_buyers), l):
                    if not mandatory <= set(L):
                        continue
                    rows, rhs = _build_system(inst, K, L)
                    if use_screen and not _float_screen(inst, K, L, rows, rhs):
                        continue
                    sol = solve_linear(rows, rhs)
                    if sol is None:
                        continue
                    eq = _exact_candidate(inst, K, L)
                    if eq is not None:
                        tier.append((eq, K, L))
        if tier:
            first = tier[0]
            for other, _, _ in tier[1:]:
                if other.prices != first[0].prices:
                    raise OracleError(
                        "two verified sign patterns disagree on prices"
                    )
            eq, K, L = first
            return OracleResult(eq, tuple(K), tuple(L))
    if use_screen:
        # The screen can only produce false positives in theory, but retry
        # exhaustively before declaring the instance unsolvable.
        return oracle_solve(inst, size_guard=size_guard, use_screen=False)
    raise OracleError("no sign pattern yields a verified equilibrium")


def numeric_objective(inst: MarketInstance, allocation, returned) -> float:
    """Floating value of the concave objective at a feasible point."""
    total = 0.0
    for i in inst.buyers:
        w = sum(
            float(inst.utilities[i][j]) * float(allocation[i][j]) for j in inst.goods
        )
        t = w + float(returned[i])
        if t <= 0:
            raise ValueError(f"buyer {i}: nonpositive utility-plus-refund")
        total += float(inst.money[i]) * math.log(t)
    return total - sum(float(v) for v in returned)


def random_feasible_point(inst: MarketInstance, rng: random.Random):
    """A random point satisfying the program constraints (not budgets)."""
    n, m = inst.n_buyers, inst.n_goods
    x = np.array([[rng.random() for _ in range(m)] for _ in range(n)])
    cols = x.sum(axis=0)
    scale = np.array([rng.random() for _ in range(m)])
    x = x / np.maximum(cols, 1e-12) * scale
    s = [rng.random() * float(inst.money[i]) for i in inst.buyers]
    return x, s


def perturbed_feasible_point(inst: MarketInstance, eq: Equilibrium, rng: random.Random, scale: float):
    """Perturb a solution within the feasible region of the program."""
    n, m = inst.n_buyers, inst.n_goods
    x = np.array([[float(v) for v in row] for row in eq.allocation])
    x = x + scale * np.array([[rng.uniform(-1, 1) for _ in range(m)] for _ in range(n)])
    x = np.clip(x, 0.0, None)
    cols = x.sum(axis=0)
    over = cols > 1.0
    x[:, over] = x[:, over] / cols[over]
    s = np.array([float(v) for v in eq.returned])
    s = np.clip(
        s + scale * np.array([rng.uniform(-1, 1) for _ in range(n)]), 0.0, None
    )
    return x, list(s)


def oracle_balanced_surplus(net: FlowNetwork, size_guard: int = 6) -> dict[int, Fraction]:
    """The l2-minimal surplus vector via subset enumeration, no max-flow.

    The total inflow any buyer group can receive is bounded by the total
    price of its neighborhood; the top surplus level is the largest average
    deficiency over groups, its argmax union is pinned there, and the rest
    recurses on the remaining subnetwork.
    """
    if len(net.buyers) > size_guard:
        raise OracleSizeError(f"{len(net.buyers)} buyers exceed the {size_guard} guard")
    out: dict[int, Fraction] = {}
    buyers = set(net.buyers)
    goods = set(net.goods)
    while buyers:
        blist = sorted(buyers)
        best: Fraction | None = None
        argmax_union: set[int] = set()
        for mask in range(1, 1 << len(blist)):
            group = {blist[b] for b in range(len(blist)) if mask >> b & 1}
            caps = sum((net.sink_caps[i] for i in group), ZERO)
            hood = {j for (j, i) in net.edges if i in group and j in goods}
            price = sum((net.source_caps[j] for j in hood), ZERO)
            h = (caps - price) / len(group)
            if best is None or h > best:
                best = h
                argmax_union = set(group)
            elif h == best:
                argmax_union |= group
        if best is None or best <= 0:
            for i in buyers:
                out[i] = ZERO
            return out
        for i in argmax_union:
            out[i] = best
        goods -= {j for (j, i) in net.edges if i in argmax_union}
        buyers -= argmax_union
    return out


def oracle_cost_solve(inst: CostMarketInstance, size_guard: int = 16) -> CostSolution:
    """Revenue-maximal verified sign pattern of the production market.

    Prices are pinned to unit costs, which decouples buyers: each buyer
    either spends everything on a best-ratio good or takes a full refund,
    and only best-ratio-1 buyers admit both.  Every admissible combination
    is checked exactly; the revenue-maximal one is returned.
    """
    base, d = inst.base, inst.unit_costs
    n, m = base.n_buyers, base.n_goods
    if n * m > size_guard * size_guard:
        raise OracleSizeError("instance exceeds the enumeration guard")
    per_buyer_modes: list[list[tuple[Fraction, Fraction]]] = []
    # mode: (spend on good j, refund) encoded as (x_value on best good or 0, s_i)
    best_goods = []
    for i in base.buyers:
        ratios = [base.utilities[i][j] / d[j] for j in base.goods]
        alpha = max(ratios)
        j_best = min(j for j in base.goods if ratios[j] == alpha)
        best_goods.append(j_best)
        modes = []
        if alpha >= 1:
            modes.append((base.money[i] / d[j_best], ZERO))
        if alpha <= 1:
            modes.append((ZERO, base.money[i]))
        per_buyer_modes.append(modes)

    best_solution: CostSolution | None = None
    for combo in itertools.product(*per_buyer_modes):
        allocation = [[ZERO] * m for _ in range(n)]
        returned = [ZERO] * n
        for i, (x_val, s_val) in enumerate(combo):
            allocation[i][best_goods[i]] = x_val
            returned[i] = s_val
        produced = tuple(
            sum((allocation[i][j] for i in base.buyers), ZERO) for j in base.goods
        )
        total_s = sum(returned, ZERO)
        revenue = sum(base.money, ZERO) - total_s
        cost = sum((d[j] * produced[j] for j in base.goods), ZERO)
        sol = CostSolution(
            prices=tuple(d),
            allocation=tuple(tuple(row) for row in allocation),
            produced=produced,
            returned=tuple(returned),
            revenue=revenue,
            profit=revenue - cost,
        )
        if not verify_cost_kkt(inst, sol).overall:
            continue
        if best_solution is None or sol.revenue > best_solution.revenue:
            best_solution = sol
    if best_solution is None:
        raise OracleError("no sign pattern yields a verified cost solution")
    return best_solution
