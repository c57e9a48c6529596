import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idfactor import (
    CapacityError,
    FactorGraph,
    GraphInputError,
    canonical_form,
    find_zuta_ordering,
    is_full_zuta,
    jpa,
    min_children_precheck,
)
from idfactor.graph import full_zuta_ordering

from conftest import small_graphs


def test_constructor_rejects_bad_edges():
    with pytest.raises(GraphInputError):
        FactorGraph(["v1"], ["h1"], [("h1", "v1"), ("h1", "v1")])
    with pytest.raises(GraphInputError):
        FactorGraph(["v1"], ["h1"], [("h1", "v2")])
    with pytest.raises(GraphInputError):
        FactorGraph(["v1"], ["h1"], [("v1", "h1")])
    with pytest.raises(GraphInputError):
        FactorGraph(["v1", "v1"], ["h1"], [])
    with pytest.raises(GraphInputError):
        FactorGraph(["a"], ["a"], [])


def test_capacity_guard():
    with pytest.raises(CapacityError):
        FactorGraph([f"v{i}" for i in range(65)], ["h1"], [])


def test_json_round_trip(figures):
    g = figures["matching_demo"]
    again = FactorGraph.from_json(g.to_json())
    assert again == g


def test_compact_parser():
    g = FactorGraph.from_compact("h1: v1 v2 v4\nh2: v2 v3 v5\n")
    assert g.children_of("h1") == {"v1", "v2", "v4"}
    assert g.observed == ("v1", "v2", "v4", "v3", "v5")
    with pytest.raises(GraphInputError):
        FactorGraph.from_compact("h1 v1 v2")
    with pytest.raises(GraphInputError):
        FactorGraph.from_compact("h1: v1\nh1: v2")


def test_jpa_examples(figures):
    assert jpa(figures["matching_demo"], {"v1", "v2", "v3"}) == {"h1", "h2"}
    assert jpa(figures["matching_demo"], set()) == set()
    assert jpa(figures["intro_overlap"], {"v1", "v2"}) == {"h1"}
    with pytest.raises(GraphInputError):
        jpa(figures["matching_demo"], {"nope"})


def test_jpa_monotone_and_bounded(figures):
    g = figures["wide_four_factor"]
    rng = random.Random(0)
    for _ in range(50):
        big = set(rng.sample(g.observed, rng.randint(0, len(g.observed))))
        small = set(rng.sample(sorted(big), rng.randint(0, len(big))))
        assert jpa(g, small) <= jpa(g, big)
        parents = set()
        for v in big:
            parents |= g.parents_of(v)
        assert jpa(g, big) <= parents


def test_zuta_examples(figures):
    z = find_zuta_ordering(figures["zuta_ordered"])
    assert z is not None
    assert set(z.ordering) == {"h1", "h2", "h3"}
    assert find_zuta_ordering(figures["zuta_blocked"]) is None
    single = FactorGraph(["v1"], ["h"], [("h", "v1")])
    assert find_zuta_ordering(single) is not None


def test_zuta_anchor_definition(figures):
    for name in ("zuta_ordered", "matching_demo", "ar_identifiable", "harman5"):
        g = figures[name]
        z = find_zuta_ordering(g)
        assert z is not None
        for pos, h in enumerate(z.ordering):
            anchor = z.anchors[h]
            later = set(z.ordering[pos + 1 :])
            assert h in g.parents_of(anchor)
            assert not (g.parents_of(anchor) & later)


def _brute_force_zuta(g):
    m = g.num_latent
    for perm in itertools.permutations(range(m)):
        ok = True
        for i, hi in enumerate(perm):
            union = 0
            for hj in perm[i + 1 :]:
                union |= g.children_masks[hj]
            if not g.children_masks[hi] & ~union:
                ok = False
                break
        if ok:
            return True
    return m == 0


def test_zuta_greedy_matches_brute_force_small():
    # completeness of greedy placement against the |H|! search
    count = 0
    for g in small_graphs(3, 5):
        count += 1
        assert (find_zuta_ordering(g) is not None) == _brute_force_zuta(g)
    assert count > 100


@settings(max_examples=150, deadline=None, derandomize=True)
@given(st.integers(0, 10**9))
def test_zuta_greedy_matches_brute_force_random(seed):
    rng = random.Random(seed)
    m, p = rng.randint(1, 4), rng.randint(1, 6)
    observed = [f"v{i}" for i in range(p)]
    latent = [f"h{j}" for j in range(m)]
    edges = [(h, v) for h in latent for v in observed if rng.random() < 0.5]
    g = FactorGraph(observed, latent, edges)
    assert (find_zuta_ordering(g) is not None) == _brute_force_zuta(g)


def test_full_zuta_examples(figures):
    assert is_full_zuta(figures["full_staircase_6_3"])
    assert is_full_zuta(figures["full_staircase_7_3"])
    assert not is_full_zuta(figures["ar_identifiable"])
    assert is_full_zuta(FactorGraph(["v1", "v2"], [], []))


def test_full_zuta_implies_zuta_and_edge_count():
    for p in range(1, 10):
        for m in range(1, p + 1):
            observed = [f"v{i + 1}" for i in range(p)]
            latent = [f"h{j + 1}" for j in range(m)]
            edges = [
                (latent[j], observed[i]) for j in range(m) for i in range(j, p)
            ]
            g = FactorGraph(observed, latent, edges)
            assert is_full_zuta(g)
            assert find_zuta_ordering(g) is not None
            assert g.edge_count == p * (m + 1) - m * (m - 1) // 2 - p
    # a staircase with one edge missing is not full
    g = FactorGraph(
        ["v1", "v2", "v3", "v4"],
        ["h1", "h2"],
        [("h1", "v1"), ("h1", "v2"), ("h1", "v3"), ("h2", "v2"), ("h2", "v4")],
    )
    assert not is_full_zuta(g)


def test_full_zuta_ordering_is_staircase(figures):
    order = full_zuta_ordering(figures["full_staircase_8_4"])
    g = figures["full_staircase_8_4"]
    names = [g.latent[i] for i in order]
    assert names == ["h1", "h2", "h3", "h4"]


def test_min_children_precheck(figures):
    assert min_children_precheck(figures["intro_overlap"])
    two = FactorGraph(["v1", "v2"], ["h1"], [("h1", "v1"), ("h1", "v2")])
    assert not min_children_precheck(two)
    childless = FactorGraph(
        ["v1", "v2", "v3"],
        ["h1", "h2"],
        [("h1", "v1"), ("h1", "v2"), ("h1", "v3")],
    )
    assert min_children_precheck(childless)


def _relabel(g, rng):
    obs = list(g.observed)
    lat = list(g.latent)
    rng.shuffle(obs)
    rng.shuffle(lat)
    omap = dict(zip(g.observed, obs))
    hmap = dict(zip(g.latent, lat))
    return FactorGraph(obs, lat, [(hmap[h], omap[v]) for h, v in g.edges()])


@settings(max_examples=120, deadline=None, derandomize=True)
@given(st.integers(0, 10**9))
def test_canonical_form_isomorphism_invariant(seed):
    rng = random.Random(seed)
    m, p = rng.randint(1, 4), rng.randint(1, 7)
    observed = [f"v{i}" for i in range(p)]
    latent = [f"h{j}" for j in range(m)]
    edges = [(h, v) for h in latent for v in observed if rng.random() < 0.4]
    g = FactorGraph(observed, latent, edges)
    c = canonical_form(g)
    assert canonical_form(_relabel(g, rng)) == c
    # idempotence: canonicalizing the canonical matrix changes nothing
    rows = c.bitmatrix()
    g2 = FactorGraph(
        [f"v{i}" for i in range(p)],
        [f"h{j}" for j in range(m)],
        [
            (f"h{j}", f"v{i}")
            for j in range(m)
            for i in range(p)
            if rows[j][i]
        ],
    )
    assert canonical_form(g2) == c


def test_canonical_form_cyclic_shift(figures):
    g = figures["full_staircase_6_3"]
    shifted = FactorGraph(
        g.observed,
        ("h2", "h3", "h1"),
        [(h, v) for h, v in g.edges()],
    )
    assert canonical_form(shifted) == canonical_form(g)


def test_canonical_form_edge_count_separates(figures):
    a = canonical_form(figures["full_staircase_6_3"])
    b = canonical_form(figures["matching_demo"])
    assert a != b


def test_canonical_form_guard():
    g = FactorGraph(["v1"], [f"h{i}" for i in range(9)], [])
    with pytest.raises(CapacityError):
        canonical_form(g)
