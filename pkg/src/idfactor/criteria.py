"""Identifiability criteria and certificate production.

Five decision procedures, all sufficient conditions for generic
sign-identifiability of (nodes of) a factor analysis graph:

* AR: after deleting any observed node, two disjoint witness sets of full
  latent size admit an intersection-free matching (requires a ZUTA ordering).
* BB: the graph is a full staircase graph below the Ledermann parameter-count
  bound.
* Matching criterion: a per-node tuple (v, W, U, S) whose two flow conditions
  pin down one loading column given previously solved columns S.
* Local BB-criterion: a tuple (B, S) locating a sub-Ledermann full staircase
  block whose latent nodes become identifiable jointly.
* Extended M: fixed-point closure alternating matching-criterion and local
  BB steps.

Failure of the sufficient criteria is inconclusive unless the three-children
necessary condition already fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .flow import (
    ar_node_check_index,
    build_flow_iii,
    build_flow_iv,
    matching_value_masks,
    max_flow,
)
from .graph import (
    FactorGraph,
    _iter_bits,
    find_zuta_ordering,
    is_full_zuta,
    jpa_mask,
)


@dataclass(frozen=True)
class TrivialCert:
    """A childless latent node, solved vacuously."""

    h: str

    def solved_set(self) -> set[str]:
        return {self.h}

    def to_dict(self) -> dict:
        return {"kind": "trivial", "h": self.h}


@dataclass(frozen=True)
class MatchingCert:
    """Witness tuple certifying one latent column given solved columns S.

    Invariants: pa(v) minus S is exactly {h}; v outside W and U; W, U
    disjoint, nonempty, equal size; W-U matching avoiding S exists; no
    matching of W+v and U+v avoiding S exists.
    """

    h: str
    v: str
    W: tuple[str, ...]
    U: tuple[str, ...]
    S: tuple[str, ...]

    def solved_set(self) -> set[str]:
        return {self.h}

    def to_dict(self) -> dict:
        return {
            "kind": "matching",
            "h": self.h,
            "v": self.v,
            "W": list(self.W),
            "U": list(self.U),
            "S": list(self.S),
        }


@dataclass(frozen=True)
class LocalBBCert:
    """Witness tuple certifying a block of latent nodes jointly.

    ``solved`` is jpa(B) minus S; ``zuta_order`` is the unique staircase
    order of the induced block; ``orderings`` gives, per solved latent node,
    a B-first ordering of its children witnessing the absorption condition;
    ``witnesses`` maps each out-of-block child to the earlier child it was
    absorbed against (used by numeric recovery).
    """

    B: tuple[str, ...]
    S: tuple[str, ...]
    solved: tuple[str, ...]
    zuta_order: tuple[str, ...]
    orderings: dict[str, tuple[str, ...]] = field(compare=False)
    witnesses: dict[str, tuple[tuple[str, str], ...]] = field(compare=False)

    def solved_set(self) -> set[str]:
        return set(self.solved)

    def to_dict(self) -> dict:
        return {
            "kind": "local_bb",
            "B": list(self.B),
            "S": list(self.S),
            "solved": list(self.solved),
            "zuta_order": list(self.zuta_order),
            "orderings": {h: list(v) for h, v in self.orderings.items()},
            "witnesses": {h: [list(p) for p in v] for h, v in self.witnesses.items()},
        }


Certificate = TrivialCert | MatchingCert | LocalBBCert


def certificate_from_dict(data: dict) -> Certificate:
    """Inverse of ``to_dict`` for all certificate kinds."""
    kind = data.get("kind")
    if kind == "trivial":
        return TrivialCert(h=data["h"])
    if kind == "matching":
        return MatchingCert(
            h=data["h"],
            v=data["v"],
            W=tuple(data["W"]),
            U=tuple(data["U"]),
            S=tuple(data["S"]),
        )
    if kind == "local_bb":
        return LocalBBCert(
            B=tuple(data["B"]),
            S=tuple(data["S"]),
            solved=tuple(data["solved"]),
            zuta_order=tuple(data["zuta_order"]),
            orderings={h: tuple(v) for h, v in data["orderings"].items()},
            witnesses={
                h: tuple((a, b) for a, b in v) for h, v in data["witnesses"].items()
            },
        )
    raise ValueError(f"unknown certificate kind {kind!r}")


# ---------------------------------------------------------------------------
# matching criterion
# ---------------------------------------------------------------------------


def check_matching_tuple(
    graph: FactorGraph,
    h: str,
    v: str,
    W: Iterable[str],
    U: Iterable[str],
    S: Iterable[str],
) -> bool:
    """Verify all four conditions of the matching criterion for one tuple.

    Conditions (i) and (ii) are direct set checks; (iii) and (iv) hold iff
    the two tuple-verification flow networks both have max flow |W|.
    Malformed sets simply fail the conditions (no exceptions).
    """
    try:
        hi = graph.latent_index(h)
        vi = graph.observed_index(v)
        wmask = graph.observed_mask(W)
        umask = graph.observed_mask(U)
        smask = graph.latent_mask(S)
    except Exception:
        return False
    if smask >> hi & 1:
        return False
    if graph.parent_masks[vi] & ~smask != 1 << hi:
        return False
    if (wmask | umask) >> vi & 1:
        return False
    if wmask & umask or not wmask or wmask.bit_count() != umask.bit_count():
        return False
    k = wmask.bit_count()
    Wn = graph.observed_names(wmask)
    Un = graph.observed_names(umask)
    Sn = graph.latent_names(smask)
    if max_flow(build_flow_iii(graph, Wn, Un, Sn)) != k:
        return False
    return max_flow(build_flow_iv(graph, v, Wn, Un, Sn)) == k


def _decide_m_node(
    graph: FactorGraph, h: int, smask: int, kmax: int
) -> tuple[int, int, int] | None:
    """Fast exact search for a tuple satisfying the matching criterion at h.

    Returns (v index, W mask, U mask) of some witness, or None when no tuple
    within the size bound exists.

    Since pa(v) minus S = {h}, any matching of W+v and U+v must contain the
    path v <- h -> v, so condition (iv) is equivalent to: no W-U matching
    avoids S+h.  Minimal witnesses therefore decompose into a pinned pair of
    h-children matched through h plus one padding pair per midpoint of a
    blocking set Y (|Y| = |W|-1): every common parent of a left and a right
    member, outside S+h, must lie in Y.  The closure-driven backtracking
    below enumerates exactly these witnesses.
    """
    if kmax < 1:
        return None
    hbit = 1 << h
    ch = graph.children_masks
    pa = graph.parent_masks
    ch_h = ch[h]
    if ch_h.bit_count() < 3:
        return None
    not_s = ~smask
    budget = kmax - 1

    def grow(
        pending: int, ymask: int, used: int, cols: list[tuple[int, int]]
    ) -> list[tuple[int, int, int]] | None:
        if not pending:
            return []
        mid = (pending & -pending).bit_length() - 1
        avail = ch[mid] & ~used
        for w in _iter_bits(avail):
            paw = pa[w]
            for u in _iter_bits(avail & ~(1 << w)):
                pau = pa[u]
                newreq = paw & pau
                for wc, uc in cols:
                    newreq |= (paw & pa[uc]) | (pa[wc] & pau)
                newreq &= not_s & ~hbit & ~ymask
                y2 = ymask | newreq
                if y2.bit_count() > budget:
                    continue
                cols.append((w, u))
                sub = grow(
                    (pending & ~(1 << mid)) | newreq,
                    y2,
                    used | (1 << w) | (1 << u),
                    cols,
                )
                cols.pop()
                if sub is not None:
                    return [(mid, w, u)] + sub
        return None

    for v in _iter_bits(ch_h):
        if pa[v] & not_s != hbit:
            continue
        pool = ch_h & ~(1 << v)
        for w0 in _iter_bits(pool):
            higher = pool & ~((1 << (w0 + 1)) - 1)
            pw0 = pa[w0]
            for u0 in _iter_bits(higher):
                req0 = pw0 & pa[u0] & not_s & ~hbit
                if req0.bit_count() > budget:
                    continue
                pads = grow(
                    req0,
                    req0,
                    (1 << v) | (1 << w0) | (1 << u0),
                    [(w0, u0)],
                )
                if pads is not None:
                    wmask = 1 << w0
                    umask = 1 << u0
                    for _, w, u in pads:
                        wmask |= 1 << w
                        umask |= 1 << u
                    return v, wmask, umask
    return None


def _matching_conditions_hold(
    graph: FactorGraph, h: int, v: int, wmask: int, umask: int, smask: int
) -> bool:
    """Conditions (iii)+(iv) on index masks, via two layered matchings.

    Relies on pa(v) minus S = {h}: condition (iv) reduces to the absence of
    a W-U matching avoiding S+h.
    """
    k = wmask.bit_count()
    if matching_value_masks(graph, wmask, umask, smask) != k:
        return False
    return matching_value_masks(graph, wmask, umask, smask | (1 << h)) < k


def solve_M(
    graph: FactorGraph, h: str, S: Iterable[str], k: int
) -> MatchingCert | None:
    """First matching-criterion tuple for h in deterministic search order.

    Search order: v by declared observed order among children of h with
    pa(v) minus S = {h}; W over subsets of V minus v containing a child of h,
    by size then lexicographic index order, bounded by
    min((|V|-1)/2 rounded down, |H minus S|, k); U over subsets of
    ch(pa(W) minus S) minus (W+v) containing a child of h, of size |W|, in
    the same order.  Absent result means no tuple exists within the bound.
    """
    hi = graph.latent_index(h)
    smask = graph.latent_mask(S)
    if smask >> hi & 1:
        return None
    witness = _decide_m_node(graph, hi, smask, k)
    if witness is None:
        return None
    vi, wmask_w, umask_w = witness
    found = _first_tuple_in_spec_order(
        graph, hi, smask, k, max_size=wmask_w.bit_count()
    )
    if found is None:
        # the witness itself is valid; fall back to it (not expected)
        found = (vi, wmask_w, umask_w)
    v, wmask, umask = found
    return MatchingCert(
        h=h,
        v=graph.observed[v],
        W=tuple(graph.observed[i] for i in _iter_bits(wmask)),
        U=tuple(graph.observed[i] for i in _iter_bits(umask)),
        S=tuple(name for name in graph.latent if name in set(graph.latent_names(smask))),
    )


def _subsets_in_order(indices: list[int], sizes: range):
    """Subsets as bitmasks, by size then lexicographic on index tuples."""
    import itertools

    for size in sizes:
        for combo in itertools.combinations(indices, size):
            mask = 0
            for i in combo:
                mask |= 1 << i
            yield mask


def _first_tuple_in_spec_order(
    graph: FactorGraph, hi: int, smask: int, k: int, max_size: int | None = None
) -> tuple[int, int, int] | None:
    """Reference enumeration of matching-criterion tuples (first hit wins)."""
    p = graph.num_observed
    hbit = 1 << hi
    not_s = ~smask
    bound = min((p - 1) // 2, (((1 << graph.num_latent) - 1) & not_s).bit_count(), k)
    if max_size is not None:
        bound = min(bound, max_size)
    ch_h = graph.children_masks[hi]
    for vi in _iter_bits(ch_h):
        if graph.parent_masks[vi] & not_s != hbit:
            continue
        rest = [i for i in range(p) if i != vi]
        for wmask in _subsets_in_order(rest, range(1, bound + 1)):
            if not wmask & ch_h:
                continue
            pool = graph.children_mask_of_set(graph.parents_mask_of_set(wmask) & not_s)
            pool &= ~(wmask | (1 << vi))
            if not pool & ch_h:
                continue
            size = wmask.bit_count()
            pool_idx = list(_iter_bits(pool))
            if len(pool_idx) < size:
                continue
            for umask in _subsets_in_order(pool_idx, range(size, size + 1)):
                if not umask & ch_h:
                    continue
                if _matching_conditions_hold(graph, hi, vi, wmask, umask, smask):
                    return vi, wmask, umask
    return None


# ---------------------------------------------------------------------------
# graph-level loops
# ---------------------------------------------------------------------------


def _childless_mask(graph: FactorGraph) -> int:
    mask = 0
    for i, cmask in enumerate(graph.children_masks):
        if not cmask:
            mask |= 1 << i
    return mask


def _default_k(graph: FactorGraph, k: int | None) -> int:
    return max(1, graph.num_latent) if k is None else k


def _default_l(graph: FactorGraph, l: int | None) -> int:
    return graph.num_observed if l is None else l


def decide_m_identifiable(graph: FactorGraph, k: int | None = None) -> bool:
    """Boolean-only version of :func:`check_m_identifiable` (no certificates)."""
    k = _default_k(graph, k)
    m = graph.num_latent
    full = (1 << m) - 1
    smask = _childless_mask(graph)
    if not all(c.bit_count() >= 3 for c in graph.children_masks if c):
        return smask == full
    progressed = True
    while smask != full and progressed:
        progressed = False
        for hi in range(m):
            if smask >> hi & 1:
                continue
            if _decide_m_node(graph, hi, smask, k) is not None:
                smask |= 1 << hi
                progressed = True
                break
    return smask == full


def check_m_identifiable(
    graph: FactorGraph, k: int | None = None
) -> tuple[bool, list[Certificate]]:
    """Recursively certify all latent nodes by the matching criterion.

    Starts from the childless nodes, then repeatedly sweeps the unsolved
    nodes in declared order, restarting the sweep after each newly solved
    node; the solved set is always passed as S.

    Returns:
        (all solved?, certificates in solve order).
    """
    k = _default_k(graph, k)
    m = graph.num_latent
    full = (1 << m) - 1
    smask = _childless_mask(graph)
    certs: list[Certificate] = [
        TrivialCert(graph.latent[i]) for i in _iter_bits(smask)
    ]
    progressed = True
    while smask != full and progressed:
        progressed = False
        for hi in range(m):
            if smask >> hi & 1:
                continue
            cert = solve_M(
                graph, graph.latent[hi], graph.latent_names(smask), k
            )
            if cert is not None:
                certs.append(cert)
                smask |= 1 << hi
                progressed = True
                break
    return smask == full, certs


def check_ar(graph: FactorGraph) -> bool:
    """AR-identifiability: a ZUTA ordering exists and every observed node
    passes the deleted-row matching test."""
    if find_zuta_ordering(graph) is None:
        return False
    if not all(c.bit_count() >= 3 for c in graph.children_masks if c):
        return False
    return all(ar_node_check_index(graph, vi) for vi in range(graph.num_observed))


def check_bb(graph: FactorGraph) -> bool:
    """BB-identifiability: full staircase graph strictly below the Ledermann
    parameter-count bound |V| + |D| < C(|V|+1, 2)."""
    if not is_full_zuta(graph):
        return False
    p = graph.num_observed
    return p + graph.edge_count < p * (p + 1) // 2


# ---------------------------------------------------------------------------
# local BB-criterion
# ---------------------------------------------------------------------------


def _staircase_order_masks(
    children: list[tuple[int, int]], full_mask: int
) -> list[int] | None:
    """Staircase order of (latent index, children mask) pairs over a universe.

    Requires child counts |B|, |B|-1, ..., each set nested into its
    predecessor by dropping exactly one element that never reappears.
    Returns latent indices top-first, or None.
    """
    p = full_mask.bit_count()
    m = len(children)
    if m == 0 or m > p:
        return None
    order = sorted(children, key=lambda t: (-(t[1].bit_count()), t[0]))
    for i, (_, cmask) in enumerate(order):
        if cmask.bit_count() != p - i:
            return None
    if order[0][1] != full_mask:
        return None
    for i in range(m - 1):
        cur = order[i][1]
        nxt = order[i + 1][1]
        dropped = cur & ~nxt
        if dropped.bit_count() != 1 or (nxt & ~cur):
            return None
        for j in range(i + 2, m):
            if order[j][1] & dropped:
                return None
    return [hi for hi, _ in order]


def check_local_bb_tuple(
    graph: FactorGraph, B: Iterable[str], S: Iterable[str]
) -> LocalBBCert | None:
    """Check the local BB-criterion for a tuple (B, S) and build its
    certificate.

    The induced block on B and its joint parents outside S must be a full
    staircase graph strictly below the Ledermann bound, and every solved
    latent node's out-of-block children must be absorbable: each one shares
    all its non-S joint parents with an earlier child, looking only at block
    latents up to that node in the staircase order.
    """
    bmask = graph.observed_mask(B)
    smask = graph.latent_mask(S)
    return _local_bb_masks(graph, bmask, smask)


def _local_bb_masks(
    graph: FactorGraph, bmask: int, smask: int
) -> LocalBBCert | None:
    jmask = jpa_mask(graph, bmask) & ~smask
    if not jmask:
        return None
    size_b = bmask.bit_count()
    children = [(hi, graph.children_masks[hi] & bmask) for hi in _iter_bits(jmask)]
    edge_total = sum(c.bit_count() for _, c in children)
    # Ledermann-style count first: cheapest rejection
    if size_b + edge_total >= size_b * (size_b + 1) // 2:
        return None
    order = _staircase_order_masks(children, bmask)
    if order is None:
        return None
    # absorption check per solved latent node
    prefix = 0
    orderings: dict[str, tuple[str, ...]] = {}
    witnesses: dict[str, tuple[tuple[str, str], ...]] = {}
    not_s = ~smask
    pa = graph.parent_masks
    for hi in order:
        prefix |= 1 << hi
        outside = graph.children_masks[hi] & ~bmask
        inside = graph.children_masks[hi] & bmask
        ordering = [graph.observed[i] for i in _iter_bits(inside)]
        absorbed: list[tuple[str, str]] = []
        work = outside
        while work:
            hit = False
            for v in _iter_bits(work):
                pav = pa[v]
                for u in _iter_bits(inside):
                    if pav & pa[u] & not_s & ~prefix:
                        continue
                    work &= ~(1 << v)
                    inside |= 1 << v
                    ordering.append(graph.observed[v])
                    absorbed.append((graph.observed[v], graph.observed[u]))
                    hit = True
                    break
                if hit:
                    break
            if not hit:
                return None
        hname = graph.latent[hi]
        orderings[hname] = tuple(ordering)
        witnesses[hname] = tuple(absorbed)
    return LocalBBCert(
        B=tuple(graph.observed[i] for i in _iter_bits(bmask)),
        S=tuple(graph.latent[i] for i in _iter_bits(smask)),
        solved=tuple(graph.latent[i] for i in _iter_bits(jmask)),
        zuta_order=tuple(graph.latent[i] for i in order),
        orderings=orderings,
        witnesses=witnesses,
    )


def solve_L(graph: FactorGraph, S: Iterable[str], l: int | None = None) -> LocalBBCert | None:
    """First tuple satisfying the local BB-criterion, or None.

    Iterates unsolved latent nodes in declared order; candidate sets B run
    over subsets of ch(h) with 4 <= |B| <= l by size then lexicographic
    order.  Subsets already contained in an earlier unsolved node's children
    are skipped (the criterion does not depend on h).
    """
    import itertools

    l = _default_l(graph, l)
    if l < 4:
        return None
    smask = graph.latent_mask(S)
    unsolved = [hi for hi in range(graph.num_latent) if not smask >> hi & 1]
    for pos, hi in enumerate(unsolved):
        pool = list(_iter_bits(graph.children_masks[hi]))
        if len(pool) < 4:
            continue
        earlier = [graph.children_masks[h2] for h2 in unsolved[:pos]]
        for size in range(4, min(l, len(pool)) + 1):
            for combo in itertools.combinations(pool, size):
                bmask = 0
                for i in combo:
                    bmask |= 1 << i
                if any(not bmask & ~c for c in earlier):
                    continue
                cert = _local_bb_masks(graph, bmask, smask)
                if cert is not None:
                    return cert
    return None


# ---------------------------------------------------------------------------
# extended M
# ---------------------------------------------------------------------------


def decide_extended_m(
    graph: FactorGraph, k: int | None = None, l: int | None = None
) -> bool:
    """Boolean-only version of :func:`check_extended_m`."""
    k = _default_k(graph, k)
    l = _default_l(graph, l)
    m = graph.num_latent
    full = (1 << m) - 1
    smask = _childless_mask(graph)
    if not all(c.bit_count() >= 3 for c in graph.children_masks if c):
        return smask == full
    progressed = True
    while smask != full and progressed:
        progressed = False
        m_progress = True
        while m_progress and smask != full:
            m_progress = False
            for hi in range(m):
                if smask >> hi & 1:
                    continue
                if _decide_m_node(graph, hi, smask, k) is not None:
                    smask |= 1 << hi
                    m_progress = True
                    progressed = True
                    break
        if smask == full:
            break
        cert = solve_L(graph, graph.latent_names(smask), l)
        if cert is not None:
            smask |= graph.latent_mask(cert.solved)
            progressed = True
    return smask == full


def check_extended_m(
    graph: FactorGraph, k: int | None = None, l: int | None = None
) -> tuple[bool, list[Certificate]]:
    """Combined fixed-point loop over matching-criterion and local-BB steps.

    Sweeps the matching criterion (restarting after each newly solved node)
    until it stalls, then attempts one local-BB step; repeats until all
    latent nodes are solved or no step makes progress.  The solved set is
    passed as S throughout, which is without loss of generality.

    Returns:
        (all solved?, certificates in solve order).
    """
    k = _default_k(graph, k)
    l = _default_l(graph, l)
    m = graph.num_latent
    full = (1 << m) - 1
    smask = _childless_mask(graph)
    certs: list[Certificate] = [
        TrivialCert(graph.latent[i]) for i in _iter_bits(smask)
    ]
    progressed = True
    while smask != full and progressed:
        progressed = False
        m_progress = True
        while m_progress and smask != full:
            m_progress = False
            for hi in range(m):
                if smask >> hi & 1:
                    continue
                cert = solve_M(graph, graph.latent[hi], graph.latent_names(smask), k)
                if cert is not None:
                    certs.append(cert)
                    smask |= 1 << hi
                    m_progress = True
                    progressed = True
                    break
        if smask == full:
            break
        bb_cert = solve_L(graph, graph.latent_names(smask), l)
        if bb_cert is not None:
            certs.append(bb_cert)
            smask |= graph.latent_mask(bb_cert.solved)
            progressed = True
    return smask == full, certs


def unsolved_after(graph: FactorGraph, certs: list[Certificate]) -> set[str]:
    """Latent nodes not covered by a certificate list."""
    solved: set[str] = set()
    for cert in certs:
        solved |= cert.solved_set()
    return set(graph.latent) - solved
