"""Factor analysis graphs and structural queries.

A factor analysis graph is a bipartite directed graph whose edges run from
latent nodes to observed nodes.  Node sets are kept in declared order; all set
computations run on integer bitmasks over dense indices, which caps graph
sizes at 64 observed and 64 latent nodes.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import CapacityError, GraphInputError

MAX_NODES = 64

CANONICAL_LATENT_GUARD = 8


def _iter_bits(mask: int) -> Iterator[int]:
    """Yield set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class FactorGraph:
    """Bipartite directed graph with latent-to-observed edges.

    Immutable after construction; all derived views (children, parents) are
    precomputed bitmasks and safe to share between threads.
    """

    __slots__ = (
        "observed",
        "latent",
        "children_masks",
        "parent_masks",
        "edge_count",
        "_vindex",
        "_hindex",
    )

    def __init__(
        self,
        observed: Iterable[str],
        latent: Iterable[str],
        edges: Iterable[tuple[str, str]],
    ):
        """Build a graph from declared node lists and (latent, observed) pairs.

        Args:
            observed: Observed node names, in declared order.
            latent: Latent node names, in declared order.
            edges: Edges as (latent name, observed name) pairs.

        Raises:
            GraphInputError: On duplicate names, duplicate edges, or edges
                referencing undeclared nodes.
            CapacityError: If either node set exceeds 64 nodes.
        """
        self.observed = tuple(observed)
        self.latent = tuple(latent)
        if len(self.observed) > MAX_NODES or len(self.latent) > MAX_NODES:
            raise CapacityError(f"node sets are capped at {MAX_NODES} per side")
        self._vindex = {name: i for i, name in enumerate(self.observed)}
        self._hindex = {name: i for i, name in enumerate(self.latent)}
        if len(self._vindex) != len(self.observed):
            raise GraphInputError("duplicate observed node names")
        if len(self._hindex) != len(self.latent):
            raise GraphInputError("duplicate latent node names")
        overlap = set(self.observed) & set(self.latent)
        if overlap:
            raise GraphInputError(f"names used as both observed and latent: {sorted(overlap)}")

        children = [0] * len(self.latent)
        parents = [0] * len(self.observed)
        count = 0
        for h, v in edges:
            if h not in self._hindex:
                if h in self._vindex:
                    raise GraphInputError(f"edge source {h!r} is an observed node")
                raise GraphInputError(f"unknown latent node {h!r}")
            if v not in self._vindex:
                if v in self._hindex:
                    raise GraphInputError(f"edge target {v!r} is a latent node")
                raise GraphInputError(f"unknown observed node {v!r}")
            hi, vi = self._hindex[h], self._vindex[v]
            if children[hi] >> vi & 1:
                raise GraphInputError(f"duplicate edge {h} -> {v}")
            children[hi] |= 1 << vi
            parents[vi] |= 1 << hi
            count += 1
        self.children_masks = tuple(children)
        self.parent_masks = tuple(parents)
        self.edge_count = count

    # -- basic queries ----------------------------------------------------

    @property
    def num_observed(self) -> int:
        return len(self.observed)

    @property
    def num_latent(self) -> int:
        return len(self.latent)

    def observed_index(self, name: str) -> int:
        try:
            return self._vindex[name]
        except KeyError:
            raise GraphInputError(f"unknown observed node {name!r}") from None

    def latent_index(self, name: str) -> int:
        try:
            return self._hindex[name]
        except KeyError:
            raise GraphInputError(f"unknown latent node {name!r}") from None

    def children_of(self, latent_name: str) -> set[str]:
        """Observed children of a latent node."""
        mask = self.children_masks[self.latent_index(latent_name)]
        return {self.observed[i] for i in _iter_bits(mask)}

    def parents_of(self, observed_name: str) -> set[str]:
        """Latent parents of an observed node."""
        mask = self.parent_masks[self.observed_index(observed_name)]
        return {self.latent[i] for i in _iter_bits(mask)}

    def edges(self) -> list[tuple[str, str]]:
        """All edges as (latent, observed) pairs in declared order."""
        out = []
        for hi, cmask in enumerate(self.children_masks):
            for vi in _iter_bits(cmask):
                out.append((self.latent[hi], self.observed[vi]))
        return out

    def has_edge(self, latent_name: str, observed_name: str) -> bool:
        hi = self.latent_index(latent_name)
        vi = self.observed_index(observed_name)
        return bool(self.children_masks[hi] >> vi & 1)

    # -- mask helpers (index-level API used by the algorithms) ------------

    def observed_mask(self, names: Iterable[str]) -> int:
        mask = 0
        for name in names:
            mask |= 1 << self.observed_index(name)
        return mask

    def latent_mask(self, names: Iterable[str]) -> int:
        mask = 0
        for name in names:
            mask |= 1 << self.latent_index(name)
        return mask

    def observed_names(self, mask: int) -> set[str]:
        return {self.observed[i] for i in _iter_bits(mask)}

    def latent_names(self, mask: int) -> set[str]:
        return {self.latent[i] for i in _iter_bits(mask)}

    def parents_mask_of_set(self, observed_set: int) -> int:
        """Union of parent masks over an observed bitmask."""
        mask = 0
        for vi in _iter_bits(observed_set):
            mask |= self.parent_masks[vi]
        return mask

    def children_mask_of_set(self, latent_set: int) -> int:
        """Union of children masks over a latent bitmask."""
        mask = 0
        for hi in _iter_bits(latent_set):
            mask |= self.children_masks[hi]
        return mask

    def induced(self, observed_set: int, latent_set: int) -> "FactorGraph":
        """Induced subgraph on the given index masks, preserving order."""
        obs = [self.observed[i] for i in _iter_bits(observed_set)]
        lat = [self.latent[i] for i in _iter_bits(latent_set)]
        edges = [
            (self.latent[hi], self.observed[vi])
            for hi in _iter_bits(latent_set)
            for vi in _iter_bits(self.children_masks[hi] & observed_set)
        ]
        return FactorGraph(obs, lat, edges)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "observed": list(self.observed),
            "latent": list(self.latent),
            "edges": [[h, v] for h, v in self.edges()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "FactorGraph":
        try:
            observed = data["observed"]
            latent = data["latent"]
            edges = [tuple(e) for e in data["edges"]]
        except (KeyError, TypeError) as exc:
            raise GraphInputError(f"missing or malformed graph field: {exc}") from exc
        for e in edges:
            if len(e) != 2:
                raise GraphInputError(f"edge entries must be pairs, got {e!r}")
        return cls(observed, latent, edges)

    @classmethod
    def from_json(cls, text: str) -> "FactorGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphInputError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise GraphInputError("graph JSON must be an object")
        return cls.from_dict(data)

    @classmethod
    def from_compact(cls, text: str) -> "FactorGraph":
        """Parse the compact text format, one line per latent node.

        Each line reads ``h1: v1 v2 v4``.  Observed nodes are declared by
        first appearance; isolated observed nodes cannot be expressed in
        this format.
        """
        latent: list[str] = []
        observed: list[str] = []
        seen_obs: set[str] = set()
        edges: list[tuple[str, str]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise GraphInputError(f"line {lineno}: expected 'latent: children'")
            name, _, rest = line.partition(":")
            name = name.strip()
            if not name:
                raise GraphInputError(f"line {lineno}: empty latent name")
            if name in latent:
                raise GraphInputError(f"line {lineno}: duplicate latent node {name!r}")
            latent.append(name)
            for child in rest.split():
                if child not in seen_obs:
                    seen_obs.add(child)
                    observed.append(child)
                edges.append((name, child))
        return cls(observed, latent, edges)

    def __repr__(self) -> str:
        return (
            f"FactorGraph(|V|={self.num_observed}, |H|={self.num_latent}, "
            f"|D|={self.edge_count})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FactorGraph):
            return NotImplemented
        return (
            self.observed == other.observed
            and self.latent == other.latent
            and self.children_masks == other.children_masks
        )

    def __hash__(self) -> int:
        return hash((self.observed, self.latent, self.children_masks))


@dataclass(frozen=True)
class ZutaOrdering:
    """A latent ordering in which every node keeps a private child.

    ``anchors[h]`` is an observed node whose only parent among ``h`` and all
    later latent nodes is ``h`` itself.
    """

    ordering: tuple[str, ...]
    anchors: dict[str, str]


@dataclass(frozen=True)
class CanonicalForm:
    """Canonical incidence matrix, invariant under node relabeling.

    ``columns`` holds one integer per observed node: bit ``m-1-i`` encodes
    incidence with the i-th latent node of the minimizing latent order, so
    integer comparison of columns equals lexicographic comparison of bit
    vectors.  Columns are sorted ascending.
    """

    num_latent: int
    num_observed: int
    columns: tuple[int, ...]

    def key(self) -> str:
        """Compact string key, usable for joins across tools."""
        cols = ".".join(format(c, "x") for c in self.columns)
        return f"{self.num_latent}x{self.num_observed}:{cols}"

    def bitmatrix(self) -> list[list[bool]]:
        """Rows = latent nodes, columns = observed nodes."""
        m = self.num_latent
        return [
            [bool(col >> (m - 1 - i) & 1) for col in self.columns]
            for i in range(m)
        ]


def jpa(graph: FactorGraph, observed_set: Iterable[str]) -> set[str]:
    """Joint parents: latent nodes with at least two children in the set.

    Args:
        graph: The factor analysis graph.
        observed_set: Observed node names (unknown names raise).

    Returns:
        Set of latent names that parent two or more distinct members.
    """
    mask = graph.observed_mask(observed_set)
    return graph.latent_names(jpa_mask(graph, mask))


def jpa_mask(graph: FactorGraph, observed_mask: int) -> int:
    """Bitmask version of :func:`jpa`."""
    out = 0
    for hi, cmask in enumerate(graph.children_masks):
        if (cmask & observed_mask).bit_count() >= 2:
            out |= 1 << hi
    return out


def find_zuta_ordering(graph: FactorGraph) -> ZutaOrdering | None:
    """Find a latent ordering witnessing the zero-upper-triangle property.

    Greedy front-to-back construction: repeatedly place any latent node that
    has a child outside the union of the other unplaced nodes' children
    (ties broken by declared order).  Greedy placement is complete: moving
    such a node to the front of any valid ordering keeps it valid, since the
    later-sets of the remaining nodes only shrink.

    Returns:
        A :class:`ZutaOrdering`, or None when no ordering exists.
    """
    m = graph.num_latent
    remaining = (1 << m) - 1
    order: list[str] = []
    anchors: dict[str, str] = {}
    for _ in range(m):
        placed = -1
        anchor_v = -1
        for hi in _iter_bits(remaining):
            others = remaining & ~(1 << hi)
            private = graph.children_masks[hi] & ~graph.children_mask_of_set(others)
            if private:
                placed = hi
                anchor_v = (private & -private).bit_length() - 1
                break
        if placed < 0:
            return None
        order.append(graph.latent[placed])
        anchors[graph.latent[placed]] = graph.observed[anchor_v]
        remaining &= ~(1 << placed)
    return ZutaOrdering(tuple(order), anchors)


def full_zuta_ordering(graph: FactorGraph) -> tuple[int, ...] | None:
    """Return latent indices in staircase order if the graph is a full
    staircase graph (every edge present except a nested chain of removals),
    else None.

    Sort latent nodes by decreasing child count; counts must be
    p, p-1, ..., p-m+1, each child set must lose exactly one node relative
    to its predecessor, and the lost node must not reappear later.
    Runs in O(|H| |V|^2) mask operations.
    """
    m = graph.num_latent
    p = graph.num_observed
    if m == 0:
        return ()
    if m > p:
        return None
    order = sorted(range(m), key=lambda hi: (-graph.children_masks[hi].bit_count(), hi))
    counts = [graph.children_masks[hi].bit_count() for hi in order]
    for i, c in enumerate(counts):
        if c != p - i:
            return None
    full = (1 << p) - 1
    if graph.children_masks[order[0]] != full:
        return None
    for i in range(m - 1):
        cur = graph.children_masks[order[i]]
        nxt = graph.children_masks[order[i + 1]]
        dropped = cur & ~nxt
        if dropped.bit_count() != 1 or (nxt & ~cur):
            return None
        for j in range(i + 2, m):
            if graph.children_masks[order[j]] & dropped:
                return None
    return tuple(order)


def is_full_zuta(graph: FactorGraph) -> bool:
    """True iff the graph is a full staircase graph (see
    :func:`full_zuta_ordering`); vacuously true with zero latent nodes."""
    return full_zuta_ordering(graph) is not None


def min_children_precheck(graph: FactorGraph) -> bool:
    """Fast necessary condition: every latent node with children has >= 3.

    Childless latent nodes are exempt (trivially sign-identifiable); a node
    with one or two children can never be certified by any of the criteria
    in this package.
    """
    for cmask in graph.children_masks:
        if cmask and cmask.bit_count() < 3:
            return False
    return True


def canonical_form(graph: FactorGraph) -> CanonicalForm:
    """Canonical form under independent permutations of both node sets.

    For each latent permutation the observed incidence columns are sorted;
    the minimum over all |H|! arrangements is canonical because observed
    permutations are unrestricted.

    Raises:
        CapacityError: If the graph has more than 8 latent nodes.
    """
    m = graph.num_latent
    p = graph.num_observed
    if m > CANONICAL_LATENT_GUARD:
        raise CapacityError(
            f"canonical_form enumerates |H|! latent orders; capped at {CANONICAL_LATENT_GUARD}"
        )
    best: tuple[int, ...] | None = None
    for perm in itertools.permutations(range(m)):
        cols = []
        for vi in range(p):
            pmask = graph.parent_masks[vi]
            code = 0
            for pos, hi in enumerate(perm):
                if pmask >> hi & 1:
                    code |= 1 << (m - 1 - pos)
            cols.append(code)
        cols.sort()
        cand = tuple(cols)
        if best is None or cand < best:
            best = cand
    assert best is not None
    return CanonicalForm(num_latent=m, num_observed=p, columns=best)
