"""Balanced flows: surplus vectors, the l2-minimizing property, potential."""

import random
from fractions import Fraction

from arcticauction.balanced import (
    balanced_flow,
    balanced_surplus,
    potential,
    surplus,
    verify_property1,
)
from arcticauction.flownet import (
    SINK,
    SOURCE,
    Flow,
    FlowNetwork,
    buyer_vertex,
    good_vertex,
    max_flow,
)
from arcticauction.oracle import oracle_balanced_surplus

F = Fraction


def net_of(prices, moneys, edges):
    return FlowNetwork(
        goods=tuple(range(len(prices))),
        buyers=tuple(range(len(moneys))),
        source_caps={j: F(p) for j, p in enumerate(prices)},
        sink_caps={i: F(c) for i, c in enumerate(moneys)},
        edges=frozenset(edges),
    )


def random_network(seed, max_buyers=4, max_goods=4):
    rng = random.Random(seed)
    m = rng.randint(1, max_goods)
    n = rng.randint(1, max_buyers)
    prices = [F(rng.randint(1, 9), rng.randint(1, 3)) for _ in range(m)]
    moneys = [F(rng.randint(0, 9), rng.randint(1, 3)) for _ in range(n)]
    edges = {(j, i) for j in range(m) for i in range(n) if rng.random() < 0.6}
    return net_of(prices, moneys, edges)


def test_surplus_saturating_flow_is_zero():
    net = net_of([1], [1], [(0, 0)])
    f = max_flow(net)
    assert surplus(net, f) == {0: F(0)}


def test_surplus_zero_flow_is_leftover():
    net = net_of([1], [3], [(0, 0)])
    zero = Flow(values={}, value=F(0))
    assert surplus(net, zero) == {0: F(3)}


def test_surplus_arithmetic():
    net = net_of([2], [2, 1], [(0, 0), (0, 1)])
    f = Flow(
        values={
            (SOURCE, good_vertex(0)): F(2),
            (good_vertex(0), buyer_vertex(0)): F(3, 2),
            (good_vertex(0), buyer_vertex(1)): F(1, 2),
            (buyer_vertex(0), SINK): F(3, 2),
            (buyer_vertex(1), SINK): F(1, 2),
        },
        value=F(2),
    )
    assert surplus(net, f) == {0: F(1, 2), 1: F(1, 2)}


def test_balanced_flow_shares_one_good():
    # One good of price 2, buyers with money 2 and 1: minimizing g0^2+g1^2
    # subject to g0+g1=1, bounds, gives (1/2, 1/2).
    net = net_of([2], [2, 1], [(0, 0), (0, 1)])
    f = balanced_flow(net)
    assert surplus(net, f) == {0: F(1, 2), 1: F(1, 2)}


def test_balanced_flow_decoupled_pairs():
    net = net_of([1, 2], [3, 2], [(0, 0), (1, 1)])
    f = balanced_flow(net)
    assert surplus(net, f) == {0: F(2), 1: F(0)}


def test_balanced_flow_unique_max_flow():
    net = net_of([1], [1], [(0, 0)])
    f = balanced_flow(net)
    assert f.value == 1
    assert surplus(net, f) == {0: F(0)}


def test_balanced_flow_is_max_flow():
    for seed in range(60):
        net = random_network(seed)
        f = balanced_flow(net)
        assert f.value == max_flow(net).value


def test_property1_holds_on_balanced_flows():
    for seed in range(60):
        net = random_network(seed)
        assert verify_property1(net, balanced_flow(net))


def test_property1_rejects_skewed_flow():
    # Push everything to the large buyer: surplus (0, 1) with a residual
    # path from the zero-surplus buyer back through the good.
    net = net_of([2], [2, 1], [(0, 0), (0, 1)])
    skew = Flow(
        values={
            (SOURCE, good_vertex(0)): F(2),
            (good_vertex(0), buyer_vertex(0)): F(2),
            (buyer_vertex(0), SINK): F(2),
        },
        value=F(2),
    )
    assert not verify_property1(net, skew)


def test_property1_single_buyer():
    net = net_of([1], [2], [(0, 0)])
    assert verify_property1(net, max_flow(net))


def test_potential_values():
    assert potential({0: F(0), 1: F(0)}) == 0
    assert potential({0: F(1, 2), 1: F(1, 2)}) == F(1, 2)
    # The l2 motivation: (1,0) and (1/2,1/2) share their l1 norm but the
    # squared l2 values 1 vs 1/2 separate them.
    assert potential({0: F(1), 1: F(0)}) == 1
    assert potential({0: F(1), 1: F(0)}) > potential({0: F(1, 2), 1: F(1, 2)})


def test_surplus_vector_is_ordering_independent():
    # Relabeling buyers and goods then unrelabeling must give the same
    # surplus vector: the balanced surplus is unique, the flow is not.
    for seed in range(40):
        net = random_network(seed)
        gamma = balanced_surplus(net)
        g_perm = {j: len(net.goods) - 1 - k for k, j in enumerate(net.goods)}
        b_perm = {i: len(net.buyers) - 1 - k for k, i in enumerate(net.buyers)}
        relabeled = FlowNetwork(
            goods=tuple(sorted(g_perm.values())),
            buyers=tuple(sorted(b_perm.values())),
            source_caps={g_perm[j]: net.source_caps[j] for j in net.goods},
            sink_caps={b_perm[i]: net.sink_caps[i] for i in net.buyers},
            edges=frozenset((g_perm[j], b_perm[i]) for (j, i) in net.edges),
        )
        gamma2 = balanced_surplus(relabeled)
        assert gamma == {i: gamma2[b_perm[i]] for i in net.buyers}


def test_matches_subset_enumeration_oracle():
    for seed in range(80):
        net = random_network(seed)
        assert balanced_surplus(net) == oracle_balanced_surplus(net)


def test_surplus_drop_bounds_potential_drop():
    # Raising prices (and possibly adding edges) with fixed sink capacities:
    # if a buyer's balanced surplus falls by sigma, the potential falls by
    # at least sigma^2.
    checked = 0
    for seed in range(120):
        rng = random.Random(10_000 + seed)
        net = random_network(seed)
        before = balanced_surplus(net)
        phi_before = potential(before)
        bumped_prices = {
            j: net.source_caps[j] + F(rng.randint(0, 4), rng.randint(1, 3))
            for j in net.goods
        }
        extra = {
            (j, i)
            for j in net.goods
            for i in net.buyers
            if rng.random() < 0.15
        }
        bigger = FlowNetwork(
            goods=net.goods,
            buyers=net.buyers,
            source_caps=bumped_prices,
            sink_caps=net.sink_caps,
            edges=net.edges | extra,
        )
        after = balanced_surplus(bigger)
        phi_after = potential(after)
        assert phi_after <= phi_before
        drops = [before[i] - after[i] for i in net.buyers if before[i] > after[i]]
        if drops:
            checked += 1
            assert phi_before - phi_after >= max(drops) ** 2
    assert checked > 20
