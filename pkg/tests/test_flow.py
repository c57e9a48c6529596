import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idfactor import (
    FactorGraph,
    GraphInputError,
    ar_node_check,
    build_flow_iii,
    build_flow_iv,
    matching_exists,
    max_flow,
)


def test_flow_panels(figures):
    g = figures["matching_demo"]
    net3 = build_flow_iii(g, {"v3", "v4"}, {"v2", "v6"}, set())
    assert max_flow(net3) == 2
    net4 = build_flow_iv(g, "v1", {"v3", "v4"}, {"v2", "v6"}, set())
    assert max_flow(net4) == 2  # no augmenting matching through v1


def test_flow_iii_empty_sets(figures):
    net = build_flow_iii(figures["matching_demo"], set(), set(), set())
    assert set(net.labels) == {"s", "t"}
    assert max_flow(net) == 0


def test_flow_iii_avoid_everything(figures):
    g = figures["matching_demo"]
    net = build_flow_iii(g, {"v2"}, {"v3"}, set(g.latent))
    assert max_flow(net) == 0


def test_flow_iii_rejects_bad_sets(figures):
    g = figures["matching_demo"]
    with pytest.raises(GraphInputError):
        build_flow_iii(g, {"v2", "v3"}, {"v3", "v4"}, set())
    with pytest.raises(GraphInputError):
        build_flow_iii(g, {"v2"}, {"v3", "v4"}, set())


def test_flow_iv_isolated_v():
    # pa(v) inside S: v and v' hang off s and t without latent arcs
    g = FactorGraph(
        ["v1", "v2", "v3"],
        ["h1", "h2"],
        [("h1", "v1"), ("h2", "v2"), ("h2", "v3")],
    )
    base = max_flow(build_flow_iii(g, {"v2"}, {"v3"}, {"h1"}))
    aug = max_flow(build_flow_iv(g, "v1", {"v2"}, {"v3"}, {"h1"}))
    assert base == aug == 1


def test_flow_iv_single_latent_path():
    g = FactorGraph(["v", "w", "u"], ["h"], [("h", "v"), ("h", "w"), ("h", "u")])
    assert max_flow(build_flow_iv(g, "v", {"w"}, {"u"}, set())) == 1


def test_flow_iv_rejects_v_in_sets(figures):
    g = figures["matching_demo"]
    with pytest.raises(GraphInputError):
        build_flow_iv(g, "v3", {"v3", "v4"}, {"v2", "v6"}, set())


def test_flow_iv_value_range(figures):
    # whenever the base flow saturates W, the augmented flow is |W| or |W|+1
    rng = random.Random(3)
    g = figures["wide_four_factor"]
    obs = list(g.observed)
    for _ in range(200):
        v = rng.choice(obs)
        rest = [x for x in obs if x != v]
        k = rng.randint(1, 3)
        chosen = rng.sample(rest, 2 * k)
        W, U = set(chosen[:k]), set(chosen[k:])
        S = {h for h in g.latent if rng.random() < 0.3}
        base = max_flow(build_flow_iii(g, W, U, S))
        if base == k:
            assert max_flow(build_flow_iv(g, v, W, U, S)) in (k, k + 1)


def test_matching_examples(figures):
    g = figures["full_staircase_5_2"]
    assert matching_exists(g, {"v2", "v3"}, {"v4", "v5"})
    assert not matching_exists(g, {"v1", "v2", "v3"}, {"v1", "v4", "v5"})
    assert matching_exists(g, set(), set())
    assert matching_exists(g, {"v1"}, {"v1"})  # path v <- h -> v
    with pytest.raises(GraphInputError):
        matching_exists(g, {"v1"}, {"v1", "v2"})


@settings(max_examples=150, deadline=None, derandomize=True)
@given(st.integers(0, 10**9))
def test_matching_symmetric(seed):
    rng = random.Random(seed)
    m, p = rng.randint(1, 4), rng.randint(2, 7)
    observed = [f"v{i}" for i in range(p)]
    latent = [f"h{j}" for j in range(m)]
    edges = [(h, v) for h in latent for v in observed if rng.random() < 0.5]
    g = FactorGraph(observed, latent, edges)
    k = rng.randint(1, min(3, p))
    A = set(rng.sample(observed, k))
    B = set(rng.sample(observed, k))
    avoid = {h for h in latent if rng.random() < 0.3}
    assert matching_exists(g, A, B, avoid) == matching_exists(g, B, A, avoid)


def test_max_flow_insertion_order_invariance(figures):
    # same network with arcs listed in reverse gives the same value
    g = figures["matching_demo"]
    net = build_flow_iii(g, {"v3", "v4"}, {"v2", "v6"}, set())
    reversed_net = type(net)(
        labels=net.labels,
        node_capacities=net.node_capacities,
        arcs=tuple(reversed(net.arcs)),
        arc_capacity=net.arc_capacity,
        source=net.source,
        target=net.target,
    )
    assert max_flow(net) == max_flow(reversed_net)


def test_dot_dump(figures):
    net = build_flow_iii(figures["matching_demo"], {"v3"}, {"v2"}, set())
    dot = net.to_dot()
    assert dot.startswith("digraph") and "->" in dot


def test_ar_node_examples(figures):
    g = figures["ar_identifiable"]
    assert all(ar_node_check(g, v) for v in g.observed)
    gm = figures["matching_demo"]
    assert not all(ar_node_check(gm, v) for v in gm.observed)  # |V| = 2|H|
    small = FactorGraph(
        ["v1", "v2", "v3", "v4"],
        ["h1", "h2"],
        [("h1", v) for v in ("v1", "v2", "v3", "v4")]
        + [("h2", v) for v in ("v1", "v2", "v3", "v4")],
    )
    assert not any(ar_node_check(small, v) for v in small.observed)
    with pytest.raises(GraphInputError):
        ar_node_check(g, "v99")
