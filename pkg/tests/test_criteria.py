import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idfactor import (
    FactorGraph,
    LocalBBCert,
    MatchingCert,
    TrivialCert,
    certificate_from_dict,
    check_ar,
    check_bb,
    check_extended_m,
    check_local_bb_tuple,
    check_m_identifiable,
    check_matching_tuple,
    decide_extended_m,
    decide_m_identifiable,
    matching_exists,
    solve_L,
    solve_M,
)
from idfactor.criteria import _decide_m_node, _first_tuple_in_spec_order


def test_check_matching_tuple_examples(figures):
    g = figures["matching_demo"]
    assert check_matching_tuple(g, "h1", "v1", {"v3", "v4"}, {"v2", "v6"}, set())
    assert check_matching_tuple(g, "h2", "v2", {"v6"}, {"v3"}, {"h1"})
    assert not check_matching_tuple(g, "h1", "v1", set(), set(), set())
    # malformed inputs fail instead of raising
    assert not check_matching_tuple(g, "h1", "v1", {"vX"}, {"v2"}, set())
    assert not check_matching_tuple(g, "h1", "v2", {"v3"}, {"v4"}, set())


def test_solve_m_examples(figures):
    g = figures["matching_demo"]
    cert = solve_M(g, "h1", set(), 2)
    assert cert is not None
    assert check_matching_tuple(g, cert.h, cert.v, cert.W, cert.U, cert.S)
    assert solve_M(g, "h3", set(), 4) is None  # needs h1, h2 solved first
    childless = FactorGraph(
        ["v1", "v2", "v3"],
        ["h1", "h2"],
        [("h1", "v1"), ("h1", "v2"), ("h1", "v3")],
    )
    assert solve_M(childless, "h2", set(), 3) is None


def test_solve_m_respects_bound(figures):
    # h1 of the six-node demo needs |W| = 2; bound 1 must fail
    g = figures["matching_demo"]
    assert solve_M(g, "h1", set(), 1) is None
    assert solve_M(g, "h1", set(), 2) is not None
    # a certificate found under a small bound stays valid under larger ones
    cert = solve_M(g, "h1", set(), 2)
    assert check_matching_tuple(g, cert.h, cert.v, cert.W, cert.U, cert.S)
    bigger = solve_M(g, "h1", set(), 4)
    assert bigger is not None


def test_m_identifiable_examples(figures):
    ok, certs = check_m_identifiable(figures["matching_demo"], 4)
    assert ok and len(certs) == 3
    ok, _ = check_m_identifiable(figures["two_block_overlap"], 4)
    assert not ok  # ZUTA fails
    assert check_m_identifiable(figures["intro_overlap"], 4)[0]
    assert check_m_identifiable(figures["wide_four_factor"], 4)[0]


def test_m_cert_order_and_invariants(figures):
    for name in ("matching_demo", "intro_overlap", "wide_four_factor", "harman5"):
        g = figures[name]
        ok, certs = check_m_identifiable(g)
        assert ok
        solved = set()
        for cert in certs:
            if isinstance(cert, TrivialCert):
                solved |= cert.solved_set()
                continue
            assert isinstance(cert, MatchingCert)
            assert set(cert.S) == solved
            assert g.parents_of(cert.v) - set(cert.S) == {cert.h}
            assert cert.v not in set(cert.W) | set(cert.U)
            assert set(cert.W).isdisjoint(cert.U)
            assert len(cert.W) == len(cert.U) >= 1
            assert matching_exists(g, set(cert.W), set(cert.U), set(cert.S))
            assert not matching_exists(
                g,
                set(cert.W) | {cert.v},
                set(cert.U) | {cert.v},
                set(cert.S),
            )
            solved |= cert.solved_set()
        assert solved == set(g.latent)


def test_trivial_childless_cert():
    g = FactorGraph(
        ["v1", "v2", "v3"],
        ["h1", "h2"],
        [("h1", "v1"), ("h1", "v2"), ("h1", "v3")],
    )
    ok, certs = check_m_identifiable(g)
    assert ok
    assert any(isinstance(c, TrivialCert) and c.h == "h2" for c in certs)


def test_ar_examples(figures):
    assert check_ar(figures["ar_identifiable"])
    assert not check_ar(figures["wide_four_factor"])
    assert not check_ar(figures["matching_demo"])


def test_bb_examples(figures):
    assert check_bb(figures["full_staircase_7_3"])
    assert not check_bb(figures["full_staircase_6_3"])  # at the bound
    assert check_bb(figures["full_staircase_8_4"])  # 8 + 26 = 34 < 36
    assert not check_bb(figures["matching_demo"])  # not a full staircase


def test_local_bb_examples(figures):
    g = figures["two_block_overlap"]
    cert = check_local_bb_tuple(g, {"v1", "v2", "v3", "v4", "v5"}, set())
    assert cert is not None and set(cert.solved) == {"h1", "h2"}
    cert2 = check_local_bb_tuple(g, {"v5", "v6", "v7", "v8", "v9"}, {"h1", "h2"})
    assert cert2 is not None and set(cert2.solved) == {"h3", "h4"}
    for B in ({"v1"}, {"v1", "v2"}, {"v1", "v2", "v3"}):
        assert check_local_bb_tuple(g, B, set()) is None


def test_local_bb_cert_structure(figures):
    g = figures["two_block_overlap"]
    cert = check_local_bb_tuple(g, {"v1", "v2", "v3", "v4", "v5"}, set())
    assert cert.zuta_order[0] in {"h1", "h2"}
    # out-of-block children absorbed with recorded witnesses
    v7_witnesses = dict(cert.witnesses["h1"])
    assert "v7" in v7_witnesses
    u = v7_witnesses["v7"]
    assert g.parents_of("v7") & g.parents_of(u) == {"h1"}
    # orderings are B-first
    for h, ordering in cert.orderings.items():
        inside = [x for x in ordering if x in set(cert.B)]
        assert ordering[: len(inside)] == tuple(inside)


def test_solve_l_examples(figures):
    g = figures["staircase_with_tail"]
    cert = solve_L(g, {"h5"}, 8)
    assert cert is not None
    assert set(cert.B) == {f"v{i}" for i in range(1, 9)}
    assert set(cert.solved) == {"h1", "h2", "h3", "h4"}
    assert solve_L(figures["matching_demo"], set(), 6) is None
    assert solve_L(g, set(), 3) is None  # bound below minimum block size


def test_extended_m_examples(figures):
    ok, certs = check_extended_m(figures["staircase_with_tail"], 4, 8)
    assert ok
    kinds = [type(c).__name__ for c in certs]
    assert kinds == ["MatchingCert", "LocalBBCert"]
    assert not check_extended_m(figures["algebraic_gap_a"], 4, 6)[0]
    assert not check_extended_m(figures["algebraic_gap_b"], 4, 6)[0]
    assert check_extended_m(figures["two_block_overlap"], 4, 6)[0]
    # neither criterion alone certifies the tailed staircase
    assert not check_m_identifiable(figures["staircase_with_tail"], 4)[0]
    lonly = solve_L(figures["staircase_with_tail"], set(), 8)
    assert lonly is not None and set(lonly.solved) == {"h1", "h2", "h3", "h4"}
    assert solve_L(figures["staircase_with_tail"], {"h1", "h2", "h3", "h4"}, 8) is None


def test_extended_m_cert_chain(figures):
    for name in ("two_block_overlap", "staircase_with_tail", "full_staircase_8_4"):
        g = figures[name]
        ok, certs = check_extended_m(g)
        assert ok
        solved = set()
        for cert in certs:
            if not isinstance(cert, TrivialCert):
                assert set(cert.S) == solved
            solved |= cert.solved_set()
        assert solved == set(g.latent)


def test_decide_matches_cert_version(figures):
    for name, g in figures.items():
        k = max(1, g.num_latent)
        assert decide_m_identifiable(g, k) == check_m_identifiable(g, k)[0]
        assert decide_extended_m(g) == check_extended_m(g)[0]


def test_latent_declaration_order_invariance(figures):
    rng = random.Random(5)
    for name in ("two_block_overlap", "staircase_with_tail", "matching_demo"):
        g = figures[name]
        want = decide_extended_m(g)
        lat = list(g.latent)
        for _ in range(4):
            rng.shuffle(lat)
            g2 = FactorGraph(g.observed, lat, g.edges())
            assert decide_extended_m(g2) == want


@settings(max_examples=200, deadline=None, derandomize=True)
@given(st.integers(0, 10**9))
def test_fast_decision_equals_reference_enumeration(seed):
    rng = random.Random(seed)
    m, p = rng.randint(1, 4), rng.randint(3, 7)
    observed = [f"v{i}" for i in range(p)]
    latent = [f"h{j}" for j in range(m)]
    edges = [(h, v) for h in latent for v in observed if rng.random() < rng.choice([0.35, 0.6])]
    g = FactorGraph(observed, latent, edges)
    h = rng.randrange(m)
    smask = rng.randrange(1 << m) & ~(1 << h)
    k = rng.randint(1, m)
    fast = _decide_m_node(g, h, smask, k)
    slow = _first_tuple_in_spec_order(g, h, smask, k)
    assert (fast is None) == (slow is None)
    if fast is not None:
        v, wm, um = fast
        assert check_matching_tuple(
            g,
            g.latent[h],
            g.observed[v],
            g.observed_names(wm),
            g.observed_names(um),
            g.latent_names(smask),
        )


def _full_staircase(p, m):
    observed = [f"v{i + 1}" for i in range(p)]
    latent = [f"h{j + 1}" for j in range(m)]
    edges = [(latent[j], observed[i]) for j in range(m) for i in range(j, p)]
    return FactorGraph(observed, latent, edges)


def _l_only_closure(g):
    smask_names = {h for h in g.latent if not g.children_of(h)}
    while True:
        cert = solve_L(g, smask_names, g.num_observed)
        if cert is None:
            return smask_names == set(g.latent)
        smask_names |= set(cert.solved)


@pytest.mark.slow
def test_full_staircase_equivalences():
    # on full staircase graphs: AR <=> M, BB <=> local-BB-only closure,
    # and AR => BB when there are at least two latent nodes
    for p in range(1, 13):
        for m in range(1, min(5, p) + 1):
            g = _full_staircase(p, m)
            ar = check_ar(g)
            mid = decide_m_identifiable(g, m)
            assert ar == mid, (p, m)
            bb = check_bb(g)
            assert bb == _l_only_closure(g), (p, m)
            if ar and m >= 2:
                assert bb, (p, m)


def test_certificate_json_round_trip(figures):
    _, certs = check_extended_m(figures["staircase_with_tail"], 4, 8)
    for cert in certs:
        again = certificate_from_dict(cert.to_dict())
        assert again == cert
    with pytest.raises(ValueError):
        certificate_from_dict({"kind": "nope"})


@pytest.mark.slow
def test_fast_decision_exhaustive_small_graphs():
    # every (graph, h, S, k) outcome of the closure-driven search equals the
    # flow-based reference enumeration on all small censused graphs
    from conftest import small_graphs

    mismatches = 0
    graphs = 0
    for g in small_graphs(3, 5):
        graphs += 1
        m = g.num_latent
        for h in range(m):
            for smask in range(1 << m):
                if smask >> h & 1:
                    continue
                for k in (1, 2, m):
                    fast = _decide_m_node(g, h, smask, k)
                    slow = _first_tuple_in_spec_order(g, h, smask, k)
                    if (fast is None) != (slow is None):
                        mismatches += 1
    assert graphs > 150
    assert mismatches == 0


def _naive_extended_m(g, k, l):
    """Literal transcription of the combined closure for cross-checking:
    one first-success matching sweep, then one local-BB attempt, repeated."""
    solved = {h for h in g.latent if not g.children_of(h)}
    while True:
        changed = False
        for h in g.latent:
            if h in solved:
                continue
            if solve_M(g, h, solved, k) is not None:
                solved.add(h)
                changed = True
                break
        cert = solve_L(g, solved, l)
        if cert is not None:
            solved |= set(cert.solved)
            changed = True
        if solved == set(g.latent) or not changed:
            return solved == set(g.latent)


@settings(max_examples=120, deadline=None, derandomize=True)
@given(st.integers(0, 10**9))
def test_extended_m_matches_naive_loop(seed):
    rng = random.Random(seed)
    m, p = rng.randint(2, 4), rng.randint(4, 8)
    observed = [f"v{i}" for i in range(p)]
    latent = [f"h{j}" for j in range(m)]
    edges = [(h, v) for h in latent for v in observed
             if rng.random() < rng.choice([0.4, 0.6, 0.8])]
    g = FactorGraph(observed, latent, edges)
    k, l = rng.randint(1, m), rng.randint(4, p)
    assert decide_extended_m(g, k, l) == _naive_extended_m(g, k, l)
