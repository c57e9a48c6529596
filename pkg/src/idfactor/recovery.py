"""Forward simulation and certificate-driven recovery of loading matrices.

The covariance of the observed vector is Sigma = Lambda Lambda^T + Omega with
Lambda supported on the graph's edges and Omega positive diagonal.  Given a
certificate list in solve order, the loading matrix is recovered column by
column up to a per-column sign; matching certificates yield closed-form
rational expressions, local-BB certificates yield a numeric block fit plus
closed-form propagation to out-of-block children.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .criteria import Certificate, LocalBBCert, MatchingCert, TrivialCert
from .errors import (
    DegeneracyError,
    FitFailureError,
    GraphInputError,
    InconsistentCovarianceError,
    UnsolvedColumnError,
)
from .graph import FactorGraph, _iter_bits

DEGENERACY_TOL = 1e-10

DEFAULT_FIT_STARTS = 20


@dataclass(frozen=True)
class LoadingMatrix:
    """Real |V| x |H| matrix supported on the graph's edge set."""

    graph: FactorGraph
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        p, m = self.graph.num_observed, self.graph.num_latent
        if vals.shape != (p, m):
            raise GraphInputError(f"loading matrix must be {p}x{m}, got {vals.shape}")
        for hi in range(m):
            off = ~self.graph.children_masks[hi]
            for vi in range(p):
                if off >> vi & 1 and vals[vi, hi] != 0.0:
                    raise GraphInputError(
                        f"nonzero loading at non-edge ({self.graph.latent[hi]}, "
                        f"{self.graph.observed[vi]})"
                    )
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class NoiseDiag:
    """Strictly positive noise variances, one per observed node."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or np.any(vals <= 0):
            raise GraphInputError("noise variances must be a positive vector")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric observed covariance with the graph's node order."""

    observed: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        n = len(self.observed)
        if vals.shape != (n, n):
            raise GraphInputError(f"covariance must be {n}x{n}")
        if not np.allclose(vals, vals.T, atol=1e-12 * max(1.0, np.abs(vals).max())):
            raise GraphInputError("covariance must be symmetric")
        object.__setattr__(self, "values", vals)


@dataclass
class RecoveryResult:
    """Recovered loadings, noise diagonal, per-column status and residual.

    ``column_status`` maps each latent name to 'exact-matching',
    'numeric-bb', or 'unsolved'.  ``residual`` is the max-abs entry of
    Sigma - (Lambda Lambda^T + Omega), or None when nothing was solved.
    """

    lambda_hat: np.ndarray
    omega_hat: np.ndarray | None
    column_status: dict[str, str]
    residual: float | None
    errors: list[str] = field(default_factory=list)


def simulate(graph: FactorGraph, lam: LoadingMatrix, omega: NoiseDiag) -> CovarianceMatrix:
    """Exact model covariance Lambda Lambda^T + Omega.

    Raises:
        GraphInputError: If shapes or supports do not match the graph.
    """
    if lam.graph is not graph and lam.graph != graph:
        raise GraphInputError("loading matrix belongs to a different graph")
    if omega.values.shape != (graph.num_observed,):
        raise GraphInputError("noise diagonal has wrong length")
    sigma = lam.values @ lam.values.T + np.diag(omega.values)
    return CovarianceMatrix(observed=graph.observed, values=sigma)


def sample_params(
    graph: FactorGraph,
    seed: int,
    low: float = 0.5,
    high: float = 1.5,
) -> tuple[LoadingMatrix, NoiseDiag]:
    """Draw generic parameters: |loading| uniform in [low, high] with random
    signs on the support, noise variances uniform in [low, high].

    Deterministic per seed.  The default range keeps magnitudes away from
    zero so that generic rational formulas stay well conditioned.
    """
    if not 0 < low < high:
        raise GraphInputError("need 0 < low < high")
    rng = np.random.default_rng(seed)
    p, m = graph.num_observed, graph.num_latent
    vals = np.zeros((p, m))
    for hi in range(m):
        for vi in _iter_bits(graph.children_masks[hi]):
            mag = rng.uniform(low, high)
            sign = 1.0 if rng.integers(0, 2) else -1.0
            vals[vi, hi] = sign * mag
    omega = rng.uniform(low, high, size=p)
    return LoadingMatrix(graph=graph, values=vals), NoiseDiag(values=omega)


class _PartialLoading:
    """Mutable loading estimate with a solved-column set."""

    def __init__(self, graph: FactorGraph):
        self.graph = graph
        self.values = np.zeros((graph.num_observed, graph.num_latent))
        self.solved_mask = 0

    def solved_names(self) -> set[str]:
        return self.graph.latent_names(self.solved_mask)

    def mark_solved(self, hi: int) -> None:
        self.solved_mask |= 1 << hi


def adjusted_sigma(
    sigma: CovarianceMatrix,
    partial_lambda: "np.ndarray | _PartialLoading",
    S: set[str] | frozenset[str],
    u: str,
    w: str,
    graph: FactorGraph | None = None,
) -> float:
    """Covariance entry with contributions of solved joint parents removed.

    Returns sigma[u, w] minus the sum over joint parents of {u, w} inside S
    of the products of their solved loadings at u and w.

    Raises:
        UnsolvedColumnError: If a required column is not solved.
    """
    if isinstance(partial_lambda, _PartialLoading):
        graph = partial_lambda.graph
        values = partial_lambda.values
        solved = partial_lambda.solved_mask
    else:
        if graph is None:
            raise GraphInputError("graph required with a bare array")
        values = partial_lambda
        solved = graph.latent_mask(S)
    ui = graph.observed_index(u)
    wi = graph.observed_index(w)
    smask = graph.latent_mask(S)
    joint = graph.parent_masks[ui] & graph.parent_masks[wi] & smask
    if joint & ~solved:
        missing = graph.latent_names(joint & ~solved)
        raise UnsolvedColumnError(f"columns not solved yet: {sorted(missing)}")
    total = sigma.values[ui, wi]
    for hi in _iter_bits(joint):
        total -= values[ui, hi] * values[wi, hi]
    return float(total)


def _adjusted_block(
    sigma: np.ndarray, partial: _PartialLoading, rows: list[int], cols: list[int], smask: int
) -> np.ndarray:
    """Vectorized adjusted covariance over index lists."""
    g = partial.graph
    out = np.empty((len(rows), len(cols)))
    for a, ui in enumerate(rows):
        for b, wi in enumerate(cols):
            total = sigma[ui, wi]
            joint = g.parent_masks[ui] & g.parent_masks[wi] & smask
            for hi in _iter_bits(joint):
                total -= partial.values[ui, hi] * partial.values[wi, hi]
            out[a, b] = total
    return out


def recover_column_matching(
    sigma: CovarianceMatrix,
    cert: MatchingCert,
    partial_lambda: _PartialLoading,
) -> np.ndarray:
    """Recover the column of cert.h from a matching certificate.

    Solves the vanishing bordered determinant for the squared anchor loading
    in Schur-complement form lambda^2 = adj(v,U) adj(W,U)^{-1} adj(W,v),
    takes the positive root (canonical sign), then divides adjusted
    covariances by the anchor for the remaining children.

    Returns:
        Full-length column vector (zeros off the support).

    Raises:
        DegeneracyError: If the witness determinant or the anchor loading is
            numerically zero (non-generic input).
        InconsistentCovarianceError: If the squared loading is negative
            beyond tolerance (covariance not in the model).
    """
    g = partial_lambda.graph
    hi = g.latent_index(cert.h)
    vi = g.observed_index(cert.v)
    smask = g.latent_mask(cert.S)
    w_idx = [g.observed_index(x) for x in cert.W]
    u_idx = [g.observed_index(x) for x in cert.U]
    s = sigma.values
    swu = _adjusted_block(s, partial_lambda, w_idx, u_idx, smask)
    svu = _adjusted_block(s, partial_lambda, [vi], u_idx, smask)[0]
    swv = _adjusted_block(s, partial_lambda, w_idx, [vi], smask)[:, 0]
    scale = max(1.0, float(np.abs(swu).max()))
    sign_det, logdet = np.linalg.slogdet(swu)
    if sign_det == 0 or math.exp(logdet) < DEGENERACY_TOL * scale**len(w_idx):
        raise DegeneracyError(
            f"witness determinant for {cert.h} below tolerance (non-generic input)"
        )
    lam_sq = float(svu @ np.linalg.solve(swu, swv))
    tol = DEGENERACY_TOL * scale
    if lam_sq < -tol:
        raise InconsistentCovarianceError(
            f"negative squared loading {lam_sq:.3e} for {cert.h}"
        )
    lam_v = math.sqrt(max(lam_sq, 0.0))
    if lam_v < DEGENERACY_TOL * math.sqrt(scale):
        raise DegeneracyError(f"anchor loading for {cert.h} is numerically zero")
    column = np.zeros(g.num_observed)
    column[vi] = lam_v
    for ui in _iter_bits(g.children_masks[hi] & ~(1 << vi)):
        num = _adjusted_block(s, partial_lambda, [vi], [ui], smask)[0, 0]
        column[ui] = num / lam_v
    return column


def recover_block_bb(
    sigma_hat_block: np.ndarray,
    subgraph: FactorGraph,
    starts: int = DEFAULT_FIT_STARTS,
    seed: int = 0,
    fit_tol: float | None = None,
) -> np.ndarray:
    """Numerically fit a staircase loading block to adjusted covariances.

    Minimizes the squared off-diagonal residuals of
    sigma_hat_block - Lambda Lambda^T over loadings supported on the block
    graph, with multistart Levenberg-style local refinement.  Column signs
    are canonicalized so each column's first nonzero entry is positive.

    Returns:
        |B| x m block loading matrix.

    Raises:
        FitFailureError: If no start converges below tolerance.
    """
    p = subgraph.num_observed
    m = subgraph.num_latent
    sig = np.asarray(sigma_hat_block, dtype=float)
    if sig.shape != (p, p):
        raise GraphInputError("block covariance has wrong shape")
    off_scale = float(np.abs(sig - np.diag(np.diag(sig))).max())
    if fit_tol is None:
        fit_tol = 1e-7 * max(1.0, off_scale)
    support = [
        (vi, hi)
        for hi in range(m)
        for vi in _iter_bits(subgraph.children_masks[hi])
    ]
    iu, ju = np.triu_indices(p, k=1)
    target = sig[iu, ju]

    def unpack(x: np.ndarray) -> np.ndarray:
        lam = np.zeros((p, m))
        for val, (vi, hi) in zip(x, support):
            lam[vi, hi] = val
        return lam

    def resid(x: np.ndarray) -> np.ndarray:
        lam = unpack(x)
        fit = lam @ lam.T
        return fit[iu, ju] - target

    rng = np.random.default_rng(seed)
    best = None
    best_err = np.inf
    for _ in range(starts):
        x0 = rng.uniform(0.5, 1.5, size=len(support))
        x0 *= np.where(rng.integers(0, 2, size=len(support)), 1.0, -1.0)
        sol = least_squares(resid, x0, method="lm", xtol=1e-14, ftol=1e-14)
        err = float(np.abs(sol.fun).max())
        if err < best_err:
            best_err = err
            best = sol.x
        if err < fit_tol:
            break
    if best is None or best_err >= fit_tol:
        raise FitFailureError(
            f"block fit residual {best_err:.3e} above tolerance {fit_tol:.3e}"
        )
    lam = unpack(best)
    for hi in range(m):
        col = lam[:, hi]
        nz = np.flatnonzero(np.abs(col) > DEGENERACY_TOL)
        if nz.size and col[nz[0]] < 0:
            lam[:, hi] = -col
    return lam


def propagate_bb_out_of_block(
    sigma: CovarianceMatrix,
    cert: LocalBBCert,
    partial_lambda: _PartialLoading,
) -> None:
    """Extend block columns to out-of-block children in certificate order.

    Processes solved latent nodes in staircase order; each out-of-block
    child v is recovered from its absorption witness u by dividing the
    adjusted covariance of (v, u) by the already-known loading at u.

    Raises:
        DegeneracyError: If a divisor loading is numerically zero.
    """
    g = partial_lambda.graph
    smask = g.latent_mask(cert.S)
    prefix = 0
    for hname in cert.zuta_order:
        hi = g.latent_index(hname)
        adjust_mask = smask | prefix
        for vname, uname in cert.witnesses[hname]:
            vi = g.observed_index(vname)
            ui = g.observed_index(uname)
            num = sigma.values[vi, ui]
            joint = g.parent_masks[vi] & g.parent_masks[ui] & adjust_mask
            for li in _iter_bits(joint):
                num -= partial_lambda.values[vi, li] * partial_lambda.values[ui, li]
            denom = partial_lambda.values[ui, hi]
            if abs(denom) < DEGENERACY_TOL:
                raise DegeneracyError(
                    f"witness loading ({uname}, {hname}) is numerically zero"
                )
            partial_lambda.values[vi, hi] = num / denom
        prefix |= 1 << hi


def recover(
    sigma: CovarianceMatrix,
    graph: FactorGraph,
    certs: list[Certificate],
    fit_starts: int = DEFAULT_FIT_STARTS,
    fit_seed: int = 0,
) -> RecoveryResult:
    """Replay a certificate list against a covariance matrix.

    Applies closed-form column recovery for matching certificates and the
    numeric block fit plus propagation for local-BB certificates, in order.
    Failures mark the affected columns unsolved and recovery continues.
    """
    if tuple(sigma.observed) != graph.observed:
        raise GraphInputError("covariance observed order differs from graph")
    partial = _PartialLoading(graph)
    status = {h: "unsolved" for h in graph.latent}
    errors: list[str] = []
    for cert in certs:
        if isinstance(cert, (MatchingCert, LocalBBCert)):
            need = graph.latent_mask(cert.S) & ~partial.solved_mask
            if need:
                missing = sorted(graph.latent_names(need))
                errors.append(f"certificate prerequisites unsolved: {missing}")
                continue
        if isinstance(cert, TrivialCert):
            partial.mark_solved(graph.latent_index(cert.h))
            status[cert.h] = "exact-matching"
        elif isinstance(cert, MatchingCert):
            try:
                column = recover_column_matching(sigma, cert, partial)
            except (DegeneracyError, InconsistentCovarianceError) as exc:
                errors.append(str(exc))
                continue
            hi = graph.latent_index(cert.h)
            partial.values[:, hi] = column
            partial.mark_solved(hi)
            status[cert.h] = "exact-matching"
        elif isinstance(cert, LocalBBCert):
            block_idx = [graph.observed_index(v) for v in cert.B]
            solved_idx = [graph.latent_index(h) for h in cert.zuta_order]
            smask = graph.latent_mask(cert.S)
            sub = graph.induced(
                graph.observed_mask(cert.B), graph.latent_mask(cert.solved)
            )
            # reorder subgraph latents into staircase order for the fit
            sub = FactorGraph(
                sub.observed,
                list(cert.zuta_order),
                [(h, v) for h, v in sub.edges()],
            )
            adj = _adjusted_block(sigma.values, partial, block_idx, block_idx, smask)
            try:
                block = recover_block_bb(adj, sub, starts=fit_starts, seed=fit_seed)
            except FitFailureError as exc:
                errors.append(str(exc))
                continue
            for col, hi in enumerate(solved_idx):
                for row, vi in enumerate(block_idx):
                    partial.values[vi, hi] = block[row, col]
            try:
                propagate_bb_out_of_block(sigma, cert, partial)
            except DegeneracyError as exc:
                errors.append(str(exc))
                for hi in solved_idx:
                    partial.values[:, hi] = 0.0
                continue
            for hname, hi in zip(cert.zuta_order, solved_idx):
                partial.mark_solved(hi)
                status[hname] = "numeric-bb"
        else:  # pragma: no cover - exhaustive
            raise TypeError(f"unknown certificate {cert!r}")
    if partial.solved_mask == 0 and graph.num_latent > 0:
        return RecoveryResult(
            lambda_hat=partial.values,
            omega_hat=None,
            column_status=status,
            residual=None,
            errors=errors,
        )
    fitted = partial.values @ partial.values.T
    omega = np.diag(sigma.values - fitted)
    resid_mat = sigma.values - (fitted + np.diag(omega))
    residual = float(np.abs(resid_mat).max()) if graph.num_observed else 0.0
    return RecoveryResult(
        lambda_hat=partial.values,
        omega_hat=omega.copy(),
        column_status=status,
        residual=residual,
        errors=errors,
    )


def numeric_matching_oracle(
    graph: FactorGraph,
    A: set[str],
    B: set[str],
    avoid: set[str] = frozenset(),
    trials: int = 5,
    seed: int = 0,
    tol: float = 1e-8,
) -> bool:
    """Rank-based test of matching existence, independent of the flow route.

    Draws random loadings supported on the edges of latents outside
    ``avoid`` and checks whether any draw makes the (A, B) minor of
    Lambda Lambda^T exceed the tolerance relative to its Hadamard bound.

    Raises:
        GraphInputError: If |A| != |B|.
    """
    a_idx = sorted(graph.observed_index(x) for x in A)
    b_idx = sorted(graph.observed_index(x) for x in B)
    if len(a_idx) != len(b_idx):
        raise GraphInputError("A and B must have equal cardinality")
    if not a_idx:
        return True
    avoid_mask = graph.latent_mask(avoid)
    rng = np.random.default_rng(seed)
    p, m = graph.num_observed, graph.num_latent
    for _ in range(trials):
        lam = np.zeros((p, m))
        for hi in range(m):
            if avoid_mask >> hi & 1:
                continue
            for vi in _iter_bits(graph.children_masks[hi]):
                mag = rng.uniform(0.5, 1.5)
                lam[vi, hi] = mag if rng.integers(0, 2) else -mag
        gram = lam @ lam.T
        sub = gram[np.ix_(a_idx, b_idx)]
        hadamard = float(np.prod(np.linalg.norm(sub, axis=1)))
        scale = max(hadamard, 1e-300)
        if abs(float(np.linalg.det(sub))) > tol * scale:
            return True
    return False


def graph_from_loadings(
    lambda_estimate: np.ndarray,
    threshold: float,
    observed: list[str] | None = None,
    latent: list[str] | None = None,
    mode: str = "magnitude",
) -> FactorGraph:
    """Support graph of a loading estimate at a threshold.

    In the default 'magnitude' mode an edge is present iff the absolute
    loading is >= threshold (inclusive boundary); threshold 0 keeps the
    support of all nonzero entries.  The 'signed' mode zeroes every loading
    smaller than the threshold as a signed number, so all sufficiently
    negative loadings drop out too; this reproduces published thresholding
    studies that compare raw loadings against the cutoff.
    """
    if threshold < 0:
        raise GraphInputError("threshold must be nonnegative")
    if mode not in ("magnitude", "signed"):
        raise GraphInputError(f"unknown thresholding mode {mode!r}")
    vals = np.asarray(lambda_estimate, dtype=float)
    if vals.ndim != 2:
        raise GraphInputError("loading estimate must be a matrix")
    p, m = vals.shape
    observed = observed or [f"v{i + 1}" for i in range(p)]
    latent = latent or [f"h{j + 1}" for j in range(m)]
    edges = []
    for j in range(m):
        for i in range(p):
            v = vals[i, j]
            keep = (abs(v) >= threshold) if mode == "magnitude" else (v >= threshold)
            if keep and v != 0.0:
                edges.append((latent[j], observed[i]))
    return FactorGraph(observed, latent, edges)


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------


def write_sigma_csv(sigma: CovarianceMatrix) -> str:
    """Covariance as CSV: header of observed names, then the symmetric body."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(sigma.observed)
    for row in sigma.values:
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def read_sigma_csv(text: str) -> CovarianceMatrix:
    """Parse the covariance CSV format produced by :func:`write_sigma_csv`."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise GraphInputError("empty covariance CSV")
    names = tuple(x.strip() for x in rows[0])
    body = rows[1:]
    if len(body) != len(names):
        raise GraphInputError("covariance CSV body does not match header size")
    try:
        vals = np.array([[float(x) for x in row] for row in body])
    except ValueError as exc:
        raise GraphInputError(f"bad number in covariance CSV: {exc}") from exc
    return CovarianceMatrix(observed=names, values=vals)


def write_loadings_csv(
    values: np.ndarray, latent: list[str], observed: list[str] | None = None
) -> str:
    """Loadings as CSV with a latent-name header; optional row-label column."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    if observed is not None:
        writer.writerow(["node", *latent])
        for name, row in zip(observed, values):
            writer.writerow([name, *[repr(float(x)) for x in row]])
    else:
        writer.writerow(latent)
        for row in values:
            writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def read_loadings_csv(text: str) -> tuple[np.ndarray, list[str], list[str] | None]:
    """Parse a loadings CSV.

    Returns (values, latent names, observed names or None).  A leading
    column named 'node' (or with an empty header cell) carries row labels;
    empty cells read as 0.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise GraphInputError("empty loadings CSV")
    header = [x.strip() for x in rows[0]]
    has_labels = header and header[0].lower() in ("", "node", "variable", "var")
    latent = header[1:] if has_labels else header
    observed: list[str] | None = [] if has_labels else None
    data = []
    for row in rows[1:]:
        if has_labels:
            observed.append(row[0].strip())
            cells = row[1:]
        else:
            cells = row
        if len(cells) != len(latent):
            raise GraphInputError("loadings CSV row width does not match header")
        try:
            data.append([float(x) if x.strip() else 0.0 for x in cells])
        except ValueError as exc:
            raise GraphInputError(f"bad number in loadings CSV: {exc}") from exc
    return np.array(data), latent, observed
