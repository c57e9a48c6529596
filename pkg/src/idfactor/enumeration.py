"""Exhaustive unlabeled-graph census and randomized large-graph experiment.

Graphs are counted as isomorphism classes under independent permutations of
the observed and latent node sets.  A class is represented by the multiset
of observed parent-set columns; a candidate is emitted iff its sorted column
tuple is minimal over all latent permutations, so every class appears
exactly once, in a deterministic order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .criteria import decide_extended_m, decide_m_identifiable, check_ar
from .errors import CapacityError, GraphInputError
from .graph import (
    FactorGraph,
    canonical_form,
    find_zuta_ordering,
    min_children_precheck,
)

ENUM_LATENT_GUARD = 8


@dataclass(frozen=True)
class EnumConvention:
    """Counting convention for the census.

    ``exact_sizes`` counts only graphs using exactly the maximum sizes;
    otherwise every size up to the maxima is included.  Childless latent
    nodes and isolated observed nodes are excluded by default: with them
    excluded, node counts are determined by the edge support and each
    unlabeled support pattern is counted once.
    """

    max_observed: int
    max_latent: int
    exact_sizes: bool = False
    allow_childless_latent: bool = False
    allow_isolated_observed: bool = False

    def describe(self) -> dict:
        return {
            "max_observed": self.max_observed,
            "max_latent": self.max_latent,
            "sizes": "exact" if self.exact_sizes else "at-most",
            "allow_childless_latent": self.allow_childless_latent,
            "allow_isolated_observed": self.allow_isolated_observed,
        }


@dataclass
class CensusRow:
    """Per-edge-count classification counts over isomorphism classes."""

    edge_count: int
    total: int = 0
    zuta: int = 0
    ar: int = 0
    m: int = 0
    ext_m: int = 0
    ext_m_zuta: int = 0
    gen_sign_id: int | None = None

    def as_dict(self) -> dict:
        out = {
            "edge_count": self.edge_count,
            "total": self.total,
            "zuta": self.zuta,
            "ar": self.ar,
            "m": self.m,
            "ext_m": self.ext_m,
            "ext_m_zuta": self.ext_m_zuta,
        }
        if self.gen_sign_id is not None:
            out["gen_sign_id"] = self.gen_sign_id
        return out


def _perm_tables(m: int) -> list[list[int]]:
    """For each latent permutation, a lookup from column mask to permuted mask."""
    tables = []
    for perm in itertools.permutations(range(m)):
        if perm == tuple(range(m)):
            continue
        table = [0] * (1 << m)
        for mask in range(1 << m):
            out = 0
            for i in range(m):
                if mask >> i & 1:
                    out |= 1 << perm[i]
            table[mask] = out
        tables.append(table)
    return tables


def _canonical_multiset(cols: tuple[int, ...], tables: list[list[int]]) -> bool:
    """Is the non-decreasing column tuple minimal over all latent permutations?"""
    for table in tables:
        mapped = sorted(table[c] for c in cols)
        if tuple(mapped) < cols:
            return False
    return True


def _columns_to_graph(cols: tuple[int, ...], m: int) -> FactorGraph:
    observed = [f"v{i + 1}" for i in range(len(cols))]
    latent = [f"h{j + 1}" for j in range(m)]
    edges = [
        (latent[j], observed[i])
        for i, col in enumerate(cols)
        for j in range(m)
        if col >> j & 1
    ]
    return FactorGraph(observed, latent, edges)


def enumerate_graphs(convention: EnumConvention) -> Iterator[FactorGraph]:
    """Yield one representative per isomorphism class, deterministically.

    Classes are generated per (latent count, observed count) pair by walking
    non-decreasing tuples of parent-set columns and keeping exactly the
    tuples that are minimal over latent permutations.

    Raises:
        CapacityError: If the latent maximum exceeds the canonicalization
            guard.
    """
    if convention.max_latent > ENUM_LATENT_GUARD:
        raise CapacityError(f"census capped at {ENUM_LATENT_GUARD} latent nodes")
    if convention.max_latent < 1 or convention.max_observed < 1:
        raise GraphInputError("size maxima must be at least 1")
    m_range = (
        [convention.max_latent]
        if convention.exact_sizes
        else range(1, convention.max_latent + 1)
    )
    p_range = (
        [convention.max_observed]
        if convention.exact_sizes
        else range(1, convention.max_observed + 1)
    )
    for m in m_range:
        tables = _perm_tables(m)
        full = (1 << m) - 1
        col_min = 0 if convention.allow_isolated_observed else 1
        col_values = list(range(col_min, 1 << m))
        for p in p_range:
            for cols in itertools.combinations_with_replacement(col_values, p):
                if not convention.allow_childless_latent:
                    used = 0
                    for c in cols:
                        used |= c
                    if used != full:
                        continue
                if _canonical_multiset(cols, tables):
                    yield _columns_to_graph(cols, m)


def _classify_one(args: tuple) -> tuple[int, bool, bool, bool, bool, str | None]:
    graph, k, l, want_key = args
    zuta = find_zuta_ordering(graph) is not None
    ar = m = ext_m = False
    if min_children_precheck(graph):
        if zuta:
            ar = check_ar(graph)
            m = decide_m_identifiable(graph, k)
        ext_m = decide_extended_m(graph, k, l)
    key = canonical_form(graph).key() if want_key else None
    return graph.edge_count, zuta, ar, m, ext_m, key


def classify_census(
    convention: EnumConvention,
    k: int | None = None,
    l: int | None = None,
    oracle_verdicts: dict[str, bool] | None = None,
    progress: Callable[[int], None] | None = None,
    jobs: int = 1,
) -> list[CensusRow]:
    """Classify every census class and aggregate counts by edge count.

    ``oracle_verdicts`` optionally maps canonical-form keys to external
    generic-sign-identifiability verdicts; gen_sign_id then counts the
    identifiable classes among all classes of the row (the oracle's own
    summary reports the ZUTA-restricted view).  Classification is
    independent per class, so ``jobs`` > 1 distributes classes over worker
    processes; counts are identical for any job count.

    Returns:
        Rows sorted by edge count.
    """
    rows: dict[int, CensusRow] = {}
    want_key = oracle_verdicts is not None
    tasks = ((g, k, l, want_key) for g in enumerate_graphs(convention))
    if jobs > 1:
        import multiprocessing as mp

        pool = mp.Pool(jobs)
        results = pool.imap(_classify_one, tasks, chunksize=256)
    else:
        pool = None
        results = map(_classify_one, tasks)
    try:
        for n, (e, zuta, ar, m_ok, ext_m, key) in enumerate(results):
            if progress is not None and n % 2048 == 0:
                progress(n)
            row = rows.get(e)
            if row is None:
                row = rows[e] = CensusRow(edge_count=e)
                if oracle_verdicts is not None:
                    row.gen_sign_id = 0
            row.total += 1
            if zuta:
                row.zuta += 1
            if ar:
                row.ar += 1
            if m_ok:
                row.m += 1
            if ext_m:
                row.ext_m += 1
                if zuta:
                    row.ext_m_zuta += 1
            if oracle_verdicts is not None and oracle_verdicts.get(key):
                row.gen_sign_id += 1
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return [rows[e] for e in sorted(rows)]


def census_totals(rows: list[CensusRow]) -> CensusRow:
    """Column sums across rows (edge_count set to -1)."""
    total = CensusRow(edge_count=-1)
    if any(r.gen_sign_id is not None for r in rows):
        total.gen_sign_id = 0
    for r in rows:
        total.total += r.total
        total.zuta += r.zuta
        total.ar += r.ar
        total.m += r.m
        total.ext_m += r.ext_m
        total.ext_m_zuta += r.ext_m_zuta
        if total.gen_sign_id is not None and r.gen_sign_id is not None:
            total.gen_sign_id += r.gen_sign_id
    return total


def random_graph(
    p: int,
    m: int,
    edge_prob: float,
    max_children: int | None = None,
    seed: int | np.random.Generator = 0,
) -> FactorGraph:
    """Sample a staircase-constrained random factor analysis graph.

    Cell (h_i, v_j) is eligible only when j >= i (the forced zero upper
    triangle raises the chance of a ZUTA ordering); eligible edges appear
    independently with ``edge_prob``.  Draws violating the per-latent child
    cap are rejected and resampled.
    """
    if not 0 < edge_prob < 1:
        raise GraphInputError("edge_prob must be strictly between 0 and 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    observed = [f"v{j + 1}" for j in range(p)]
    latent = [f"h{i + 1}" for i in range(m)]
    while True:
        draws = rng.random((m, p))
        edges = []
        ok = True
        for i in range(m):
            count = 0
            for j in range(p):
                if j >= i and draws[i, j] < edge_prob:
                    edges.append((latent[i], observed[j]))
                    count += 1
            if max_children is not None and count > max_children:
                ok = False
                break
        if ok:
            return FactorGraph(observed, latent, edges)


@dataclass
class ExperimentReport:
    """Extended-M acceptance rates of the random-graph experiment."""

    p: int
    m: int
    samples: int
    k: int
    max_children: int | None
    seed: int
    rows: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "samples": self.samples,
            "k": self.k,
            "max_children": self.max_children,
            "seed": self.seed,
            "rows": self.rows,
        }


def _experiment_sample(args: tuple) -> bool:
    p, m, prob, cap, k, seed_key = args
    rng = np.random.default_rng(seed_key)
    graph = random_graph(p, m, prob, cap, rng)
    if not min_children_precheck(graph):
        return False
    return decide_extended_m(graph, k=k, l=None)


def run_random_experiment(
    p: int,
    m: int,
    edge_probs: list[float],
    samples: int,
    k: int = 4,
    max_children: int | None = 10,
    seed: int = 2024,
    jobs: int = 1,
    progress: Callable[[float, int], None] | None = None,
) -> ExperimentReport:
    """Fraction of random graphs that are extended M-identifiable.

    Deterministic per master seed regardless of job count: sample i of
    probability index pi uses the derived seed (seed, pi, i).
    """
    report = ExperimentReport(
        p=p, m=m, samples=samples, k=k, max_children=max_children, seed=seed
    )
    if samples == 0:
        return report
    for pi, prob in enumerate(edge_probs):
        tasks = [(p, m, prob, max_children, k, (seed, pi, i)) for i in range(samples)]
        if jobs > 1:
            import multiprocessing as mp

            with mp.Pool(jobs) as pool:
                flags = pool.map(_experiment_sample, tasks, chunksize=64)
        else:
            flags = []
            for i, t in enumerate(tasks):
                flags.append(_experiment_sample(t))
                if progress is not None and i % 200 == 0:
                    progress(prob, i)
        hits = sum(flags)
        report.rows.append(
            {
                "edge_prob": prob,
                "ext_m_count": int(hits),
                "percentage": 100.0 * hits / samples if samples else float("nan"),
            }
        )
    return report
