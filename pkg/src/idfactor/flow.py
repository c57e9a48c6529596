"""Node-capacitated max-flow and matching-existence queries.

The two layered flow constructions answer whether systems of paths
``w <- h -> u`` with pairwise-distinct latent midpoints exist.  Node
capacities are enforced by the standard node-splitting transformation; the
"infinite" capacities on source, target and arcs are realized as |W|+1,
which no feasible flow can exceed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import GraphInputError
from .graph import FactorGraph, _iter_bits


@dataclass(frozen=True)
class FlowNetwork:
    """Directed acyclic s-t network with integer node capacities.

    Arcs all share one capacity (``arc_capacity``); per-node limits are in
    ``node_capacities``.  Interior nodes with no incident arcs are pruned at
    construction time.
    """

    labels: tuple[str, ...]
    node_capacities: tuple[int, ...]
    arcs: tuple[tuple[int, int], ...]
    arc_capacity: int
    source: int
    target: int

    def to_dot(self) -> str:
        """DOT text dump for debugging."""
        lines = ["digraph flow {"]
        for i, lab in enumerate(self.labels):
            cap = self.node_capacities[i]
            lines.append(f'  n{i} [label="{lab} (cap {cap})"];')
        for u, v in self.arcs:
            lines.append(f"  n{u} -> n{v};")
        lines.append("}")
        return "\n".join(lines)


def max_flow(net: FlowNetwork) -> int:
    """Value of a maximum integral s-t flow.

    Node capacities are handled by splitting node i into 2i -> 2i+1 with the
    node's capacity on the internal arc.  BFS augmentation in fixed adjacency
    order keeps the result deterministic regardless of arc insertion order.
    """
    n = len(net.labels)
    head: list[list[int]] = [[] for _ in range(2 * n)]
    to: list[int] = []
    cap: list[int] = []

    def add(u: int, v: int, c: int) -> None:
        head[u].append(len(to))
        to.append(v)
        cap.append(c)
        head[v].append(len(to))
        to.append(u)
        cap.append(0)

    for i in range(n):
        add(2 * i, 2 * i + 1, net.node_capacities[i])
    for u, v in net.arcs:
        add(2 * u + 1, 2 * v, net.arc_capacity)

    return _augment_to_max(head, to, cap, 2 * net.source, 2 * net.target + 1)


def _augment_to_max(
    head: list[list[int]], to: list[int], cap: list[int], s: int, t: int
) -> int:
    """Edmonds-Karp on a prebuilt residual structure."""
    size = len(head)
    total = 0
    while True:
        prev = [-1] * size
        prev[s] = -2
        queue = [s]
        qi = 0
        while qi < len(queue) and prev[t] == -1:
            u = queue[qi]
            qi += 1
            for ei in head[u]:
                v = to[ei]
                if cap[ei] > 0 and prev[v] == -1:
                    prev[v] = ei
                    queue.append(v)
        if prev[t] == -1:
            return total
        bottleneck: int | None = None
        v = t
        while v != s:
            ei = prev[v]
            bottleneck = cap[ei] if bottleneck is None else min(bottleneck, cap[ei])
            v = to[ei ^ 1]
        v = t
        while v != s:
            ei = prev[v]
            cap[ei] -= bottleneck
            cap[ei ^ 1] += bottleneck
            v = to[ei ^ 1]
        total += bottleneck


def _build_tuple_network(
    graph: FactorGraph,
    wmask: int,
    umask: int,
    smask: int,
    v_index: int | None,
) -> FlowNetwork:
    """Shared builder for the two tuple-verification networks.

    Flow runs s -> W -> latent layer -> U -> t; with ``v_index`` set, v and a
    copy v' are added with arcs through pa(v) outside S.  Latent nodes outside
    S appear iff they carry at least one arc.
    """
    k = wmask.bit_count()
    inf = k + 1 if v_index is None else k + 2
    labels = ["s", "t"]
    caps = [inf, inf]
    arcs: list[tuple[int, int]] = []
    w_id: dict[int, int] = {}
    u_id: dict[int, int] = {}
    h_id: dict[int, int] = {}

    def intern(table: dict[int, int], idx: int, label: str) -> int:
        if idx not in table:
            table[idx] = len(labels)
            labels.append(label)
            caps.append(1)
        return table[idx]

    for wi in _iter_bits(wmask):
        arcs.append((0, intern(w_id, wi, graph.observed[wi])))
    free = ~smask
    for hi in range(graph.num_latent):
        if not free >> hi & 1:
            continue
        cmask = graph.children_masks[hi]
        touches_w = cmask & wmask
        touches_u = cmask & umask
        touches_v = v_index is not None and (cmask >> v_index & 1)
        if not (touches_w or touches_u or touches_v):
            continue
        hn = intern(h_id, hi, graph.latent[hi])
        for wi in _iter_bits(touches_w):
            arcs.append((w_id[wi], hn))
        for ui in _iter_bits(touches_u):
            arcs.append((hn, intern(u_id, ui, graph.observed[ui])))
    for ui in _iter_bits(umask):
        arcs.append((intern(u_id, ui, graph.observed[ui]), 1))
    if v_index is not None:
        vname = graph.observed[v_index]
        vn = len(labels)
        labels.append(vname)
        caps.append(1)
        vprime = len(labels)
        labels.append(vname + "'")
        caps.append(1)
        arcs.append((0, vn))
        for hi in _iter_bits(graph.parent_masks[v_index] & free):
            hn = h_id[hi]  # created above because h -> v is an edge
            arcs.append((vn, hn))
            arcs.append((hn, vprime))
        arcs.append((vprime, 1))
    return FlowNetwork(
        labels=tuple(labels),
        node_capacities=tuple(caps),
        arcs=tuple(arcs),
        arc_capacity=inf,
        source=0,
        target=1,
    )


def _check_wu(graph: FactorGraph, W: Iterable[str], U: Iterable[str]) -> tuple[int, int]:
    wmask = graph.observed_mask(W)
    umask = graph.observed_mask(U)
    if wmask & umask:
        raise GraphInputError("W and U must be disjoint")
    if wmask.bit_count() != umask.bit_count():
        raise GraphInputError("W and U must have equal cardinality")
    return wmask, umask


def build_flow_iii(
    graph: FactorGraph,
    W: Iterable[str],
    U: Iterable[str],
    S: Iterable[str],
) -> FlowNetwork:
    """Flow graph deciding whether W and U admit an intersection-free
    matching avoiding S; the matching exists iff the max flow equals |W|.

    Raises:
        GraphInputError: If W and U overlap or differ in size.
    """
    wmask, umask = _check_wu(graph, W, U)
    return _build_tuple_network(graph, wmask, umask, graph.latent_mask(S), None)


def build_flow_iv(
    graph: FactorGraph,
    v: str,
    W: Iterable[str],
    U: Iterable[str],
    S: Iterable[str],
) -> FlowNetwork:
    """Augmented flow graph that additionally routes v on both sides, via a
    copy v'; no matching of W+v and U+v exists iff max flow stays at |W|.

    Raises:
        GraphInputError: If v lies in W or U, or W/U are invalid.
    """
    vi = graph.observed_index(v)
    wmask, umask = _check_wu(graph, W, U)
    if (wmask | umask) >> vi & 1:
        raise GraphInputError("v must not lie in W or U")
    return _build_tuple_network(graph, wmask, umask, graph.latent_mask(S), vi)


def matching_exists(
    graph: FactorGraph,
    A: Iterable[str],
    B: Iterable[str],
    avoid: Iterable[str] = (),
) -> bool:
    """Does an intersection-free matching of A and B avoiding ``avoid`` exist?

    A matching pairs A with B through paths ``a <- h -> b`` whose latent
    midpoints are pairwise distinct.  Shared members of A and B get distinct
    left/right copies, so a path may pair a node with itself.

    Raises:
        GraphInputError: If |A| != |B|.
    """
    amask = graph.observed_mask(A)
    bmask = graph.observed_mask(B)
    if amask.bit_count() != bmask.bit_count():
        raise GraphInputError("A and B must have equal cardinality")
    avoid_mask = graph.latent_mask(avoid)
    return matching_value_masks(graph, amask, bmask, avoid_mask) == amask.bit_count()


def matching_value_masks(
    graph: FactorGraph, amask: int, bmask: int, avoid_mask: int
) -> int:
    """Maximum number of disjoint ``a <- h -> b`` paths pairing subsets of the
    left mask with subsets of the right mask, avoiding the given latents.

    Exact max flow on the layered network s -> A -> H -> B -> t with unit
    node capacities (left and right copies of a shared node are distinct).
    """
    a_nodes = list(_iter_bits(amask))
    b_nodes = list(_iter_bits(bmask))
    free = ~avoid_mask
    h_nodes = [
        hi
        for hi in range(graph.num_latent)
        if free >> hi & 1 and graph.children_masks[hi] & (amask | bmask)
    ]
    hpos = {hi: j for j, hi in enumerate(h_nodes)}
    bpos = {bi: k for k, bi in enumerate(b_nodes)}
    na, nh, nb = len(a_nodes), len(h_nodes), len(b_nodes)

    # nodes: 0=s, 1=t, then A, H, B; split in=2i, out=2i+1
    n = 2 + na + nh + nb
    head: list[list[int]] = [[] for _ in range(2 * n)]
    to: list[int] = []
    cap: list[int] = []

    def add(u: int, v: int, c: int) -> None:
        head[u].append(len(to))
        to.append(v)
        cap.append(c)
        head[v].append(len(to))
        to.append(u)
        cap.append(0)

    INF = na + 1
    for i in range(2, n):
        add(2 * i, 2 * i + 1, 1)
    a_base, h_base, b_base = 2, 2 + na, 2 + na + nh
    s_out, t_in = 1, 2 * 1
    for i, ai in enumerate(a_nodes):
        add(s_out, 2 * (a_base + i), INF)
        for hi in _iter_bits(graph.parent_masks[ai] & free):
            add(2 * (a_base + i) + 1, 2 * (h_base + hpos[hi]), INF)
    for j, hi in enumerate(h_nodes):
        for bi in _iter_bits(graph.children_masks[hi] & bmask):
            add(2 * (h_base + j) + 1, 2 * (b_base + bpos[bi]), INF)
    for k in range(nb):
        add(2 * (b_base + k) + 1, t_in, INF)
    return _augment_to_max(head, to, cap, s_out, t_in)


def ar_node_check(graph: FactorGraph, v: str) -> bool:
    """Can the observed node v be deleted while two disjoint full-size
    witness sets remain?

    True iff disjoint W, U inside V minus v with |W| = |U| = |H| admit an
    intersection-free matching.  Reduction: a bipartite graph on two copies
    of the latent nodes versus V minus v, with h and its duplicate adjacent
    to ch(h) minus v, has a matching of size 2|H| iff such W, U exist.

    Raises:
        GraphInputError: If v is unknown.
    """
    vi = graph.observed_index(v)
    return ar_node_check_index(graph, vi)


def ar_node_check_index(graph: FactorGraph, vi: int) -> bool:
    """Index-level version of :func:`ar_node_check`."""
    m = graph.num_latent
    if m == 0:
        return True
    allowed = ((1 << graph.num_observed) - 1) & ~(1 << vi)
    if allowed.bit_count() < 2 * m:
        return False
    adj = [graph.children_masks[hi] & allowed for hi in range(m)]
    owner: dict[int, int] = {}  # observed index -> left node in [0, 2m)

    def augment(left: int, visited: int) -> tuple[bool, int]:
        for oi in _iter_bits(adj[left % m] & ~visited):
            visited |= 1 << oi
            if oi not in owner:
                owner[oi] = left
                return True, visited
            ok, visited = augment(owner[oi], visited)
            if ok:
                owner[oi] = left
                return True, visited
        return False, visited

    for left in range(2 * m):
        ok, _ = augment(left, 0)
        if not ok:
            return False
    return True
