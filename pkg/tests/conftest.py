import itertools

import pytest

from idfactor.fixtures import GRAPH_NAMES, load_graph
from idfactor.graph import FactorGraph


@pytest.fixture(scope="session")
def figures():
    return {name: load_graph(name) for name in GRAPH_NAMES}


def small_graphs(max_latent, max_observed, require_cover=True):
    """All parent-set-multiset classes up to the given sizes (one per class)."""
    for m in range(1, max_latent + 1):
        perms = [
            [sum(1 << perm[i] for i in range(m) if mask >> i & 1) for mask in range(1 << m)]
            for perm in itertools.permutations(range(m))
            if perm != tuple(range(m))
        ]
        cols = list(range(1, 1 << m))
        for p in range(1, max_observed + 1):
            for combo in itertools.combinations_with_replacement(cols, p):
                if require_cover:
                    used = 0
                    for c in combo:
                        used |= c
                    if used != (1 << m) - 1:
                        continue
                if any(tuple(sorted(t[c] for c in combo)) < combo for t in perms):
                    continue
                observed = [f"v{i + 1}" for i in range(p)]
                latent = [f"h{j + 1}" for j in range(m)]
                edges = [
                    (latent[j], observed[i])
                    for i, c in enumerate(combo)
                    for j in range(m)
                    if c >> j & 1
                ]
                yield FactorGraph(observed, latent, edges)
