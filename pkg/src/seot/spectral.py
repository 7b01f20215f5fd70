"""Normalized Laplacian, iterative eigensolver, and spectral embeddings.

The symmetric normalized Laplacian of a graph with adjacency A and degrees d
is L = I - D^{-1/2} A D^{-1/2}; it is positive semi-definite with spectrum in
[0, 2], and the multiplicity of its zero eigenvalue equals the number of
connected components. Embedding a graph means collecting the eigenvectors of
the k smallest eigenvalues as columns of F: that F minimizes Tr(F^T L F) over
matrices with orthonormal columns, and each node is represented by its row.

Rather than shift-inverting L, the solver runs block Lanczos on the
normalized adjacency N = D^{-1/2} A D^{-1/2}: the largest eigenvalues of N
are the smallest of L (lambda = 1 - sigma), so only sparse matvecs are
needed. A block of width m is used because a single Krylov sequence carries
at most one copy of each distinct eigenvalue, while disconnected components
produce exact multiplicities that must all be recovered.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import InvalidInput, IterativeSolverError
from .graph import CrossDomainGraph

SELF_LOOP = "self-loop"
DROP = "drop"


@dataclass
class LaplacianOperator:
    """Matrix-free symmetric normalized Laplacian over a frozen graph.

    Isolated nodes either receive a unit self-loop (degree 1, Laplacian acts
    as zero on them, eigenvalue 0) or are dropped, in which case `kept` maps
    operator coordinates back to graph node indices. Matvec count and wall
    time are accumulated for complexity measurements; a block of b columns
    counts as b matvecs.
    """

    graph: CrossDomainGraph
    isolated_policy: str
    inv_sqrt_degree: np.ndarray
    kept: np.ndarray | None
    normalized_adjacency: sp.csr_matrix = field(repr=False)
    matvec_count: int = 0
    matvec_seconds: float = 0.0

    @property
    def size(self) -> int:
        return self.normalized_adjacency.shape[0]

    def apply_adjacency(self, v: np.ndarray) -> np.ndarray:
        """v -> D^{-1/2} A D^{-1/2} v (timed; self-loops included)."""
        t0 = time.perf_counter()
        out = self.normalized_adjacency @ v
        self.matvec_seconds += time.perf_counter() - t0
        self.matvec_count += 1 if v.ndim == 1 else v.shape[1]
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        """v -> L v = v - D^{-1/2} A D^{-1/2} v."""
        return v - self.apply_adjacency(v)


def laplacian(
    graph: CrossDomainGraph, isolated_policy: str = SELF_LOOP
) -> LaplacianOperator:
    """Build the normalized-Laplacian operator for a frozen graph."""
    if isolated_policy not in (SELF_LOOP, DROP):
        raise InvalidInput(f"unknown isolated-node policy {isolated_policy!r}")
    degrees = graph.degrees.copy()
    isolated = degrees == 0

    rows = np.concatenate([graph.rows, graph.cols])
    cols = np.concatenate([graph.cols, graph.rows])
    weights = np.concatenate([graph.weights, graph.weights])

    if isolated_policy == SELF_LOOP:
        degrees[isolated] = 1.0
        iso_idx = np.flatnonzero(isolated)
        rows = np.concatenate([rows, iso_idx])
        cols = np.concatenate([cols, iso_idx])
        weights = np.concatenate([weights, np.ones(iso_idx.size)])
        kept = None
        n = graph.n_nodes
    else:
        kept = np.flatnonzero(~isolated)
        remap = -np.ones(graph.n_nodes, dtype=np.int64)
        remap[kept] = np.arange(kept.size)
        rows = remap[rows]
        cols = remap[cols]
        degrees = degrees[kept]
        n = kept.size

    inv_sqrt = 1.0 / np.sqrt(degrees)
    scaled = weights * inv_sqrt[rows] * inv_sqrt[cols]
    normalized = sp.csr_matrix((scaled, (rows, cols)), shape=(n, n))
    return LaplacianOperator(
        graph=graph,
        isolated_policy=isolated_policy,
        inv_sqrt_degree=inv_sqrt,
        kept=kept,
        normalized_adjacency=normalized,
    )


def _extend_basis(
    basis: np.ndarray,
    q: int,
    candidates: np.ndarray,
    n_new: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Orthonormal columns extending basis[:, :q], seeded from `candidates`.

    Each candidate goes through two full Gram-Schmidt passes; candidates that
    vanish (rank deficiency) are replaced by fresh random directions so the
    subspace always grows by exactly n_new columns.
    """
    n = basis.shape[0]
    new_cols = np.empty((n, n_new))
    got = 0
    cand_idx = 0
    while got < n_new:
        if cand_idx < candidates.shape[1]:
            v = candidates[:, cand_idx].copy()
            cand_idx += 1
        else:
            v = rng.standard_normal(n)
        for _ in range(4):
            for _ in range(2):
                v -= basis[:, :q] @ (basis[:, :q].T @ v)
                if got:
                    v -= new_cols[:, :got] @ (new_cols[:, :got].T @ v)
            nrm = np.linalg.norm(v)
            if nrm > 1e-10:
                break
            v = rng.standard_normal(n)
        new_cols[:, got] = v / nrm
        got += 1
    return new_cols


def smallest_eigenpairs(
    op: LaplacianOperator,
    m: int,
    tol: float = 1e-8,
    max_iter: int | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """The m algebraically smallest Laplacian eigenpairs.

    Block Lanczos with full reorthogonalization on the normalized adjacency.
    The projected matrix H = V^T N V is accumulated explicitly, so random
    replacement of rank-deficient block columns needs no special casing, and
    Ritz residuals ||N v - sigma v|| (identical to the Laplacian residuals)
    come from the stored N V product without extra matvecs. Convergence is a
    bound on the residual of the whole wanted invariant subspace, which is
    the right notion when components make eigenvalues exactly degenerate.

    Returns eigenvalues ascending and the matching orthonormal eigenvector
    columns. Raises IterativeSolverError (carrying the achieved residuals)
    if the basis budget `max_iter` is exhausted first.
    """
    n = op.size
    if m < 1 or m > n:
        raise InvalidInput(f"need 1 <= m <= {n}, got m={m}")
    budget = min(n, max_iter) if max_iter is not None else min(n, max(20 * m + 50, 200))
    budget = max(budget, min(n, m))
    rng = np.random.default_rng(seed)
    b = min(m, budget)

    V = np.zeros((n, budget))
    NV = np.zeros((n, budget))
    H = np.zeros((budget, budget))

    values = vectors = residuals = None
    q = 0
    candidates = rng.standard_normal((n, b))
    while True:
        width = min(b, budget - q)
        block = _extend_basis(V, q, candidates, width, rng)
        V[:, q : q + width] = block
        nblock = op.apply_adjacency(block)
        NV[:, q : q + width] = nblock
        # Grow H = V^T N V; symmetry of N gives the mirrored strip for free.
        strip = V[:, : q + width].T @ nblock
        H[: q + width, q : q + width] = strip
        H[q : q + width, :q] = strip[:q].T
        q += width

        if q >= m or q == budget:
            take = min(m, q)
            theta, y = scipy.linalg.eigh(H[:q, :q])
            sel = np.argsort(theta)[-take:][::-1]
            values = theta[sel]
            vectors = V[:, :q] @ y[:, sel]
            resid_mat = NV[:, :q] @ y[:, sel] - vectors * values[None, :]
            residuals = np.linalg.norm(resid_mat, axis=0)
            if take == m and residuals.max() <= tol:
                break
        if q == budget:
            break
        candidates = nblock

    if residuals is None or residuals.size < m or residuals.max() > tol:
        achieved = residuals if residuals is not None else np.array([])
        raise IterativeSolverError(
            f"eigensolver did not reach tol={tol} within {budget} basis vectors "
            f"(max residual {achieved.max() if achieved.size else np.inf:.3e})",
            residuals=achieved,
        )
    # Largest adjacency eigenvalues, descending, are the smallest Laplacian
    # eigenvalues ascending.
    eigenvalues = 1.0 - values
    return eigenvalues, vectors


@dataclass(frozen=True)
class SpectralEmbedding:
    """Rows of the k lowest Laplacian eigenvectors, one row per node.

    `vectors` keeps the raw orthonormal columns (the trace minimizer);
    `features` is what downstream consumers should use: identical to
    `vectors` unless `row_normalized`, in which case every nonzero row is
    scaled to unit norm. `eigenvalues` holds m >= k values so spectral gaps
    beyond k are reportable.
    """

    vectors: np.ndarray
    features: np.ndarray
    eigenvalues: np.ndarray
    k: int
    row_normalized: bool

    @property
    def n_nodes(self) -> int:
        return self.vectors.shape[0]


def row_normalize_rows(F: np.ndarray) -> np.ndarray:
    """Scale every nonzero row to unit Euclidean norm; zero rows stay zero."""
    norms = np.linalg.norm(F, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return F / safe


def embed(
    op: LaplacianOperator,
    k: int,
    row_normalize: bool = True,
    tol: float = 1e-8,
    max_iter: int | None = None,
    seed: int = 0,
    gap_margin: int = 5,
) -> SpectralEmbedding:
    """Spectral embedding of dimension k, deterministic given `seed`.

    Computes min(size - 1, k + gap_margin) eigenvalues so the gaps around k
    can be reported alongside the embedding.
    """
    if k < 1 or k >= op.size:
        raise InvalidInput(f"need 1 <= k < {op.size}, got k={k}")
    m = min(op.size - 1, k + gap_margin)
    m = max(m, k)
    eigenvalues, vectors = smallest_eigenpairs(
        op, m, tol=tol, max_iter=max_iter, seed=seed
    )
    F = vectors[:, :k]
    features = row_normalize_rows(F) if row_normalize else F
    return SpectralEmbedding(
        vectors=F,
        features=features,
        eigenvalues=eigenvalues,
        k=k,
        row_normalized=row_normalize,
    )


@dataclass(frozen=True)
class GapSelection:
    """Result of eigengap-based dimension selection.

    `gaps[i]` is lambda_{j+1} - lambda_j for j = k_min + i (eigenvalues
    1-indexed ascending); `k` is the gap-maximizing j, ties resolved toward
    the smallest. `class_gap` reports the gap at j = n_classes separately.
    """

    k: int
    gaps: np.ndarray
    k_min: int
    k_max: int
    class_gap: float


def select_k(
    eigenvalues: np.ndarray,
    n_classes: int,
    k_min: int,
    k_max: int,
) -> GapSelection:
    """Pick the embedding dimension maximizing the eigengap over [k_min, k_max]."""
    ev = np.asarray(eigenvalues, dtype=np.float64).ravel()
    if k_min < 1 or k_min > k_max:
        raise InvalidInput(f"need 1 <= k_min <= k_max, got [{k_min}, {k_max}]")
    if k_min < n_classes:
        raise InvalidInput(f"k_min={k_min} below the class count {n_classes}")
    if k_max + 1 > ev.shape[0]:
        raise InvalidInput(
            f"k_max={k_max} needs {k_max + 1} eigenvalues, have {ev.shape[0]}"
        )
    if np.any(np.diff(ev) < -1e-10):
        raise InvalidInput("eigenvalues must be ascending")
    js = np.arange(k_min, k_max + 1)
    gaps = ev[js] - ev[js - 1]
    k = int(js[np.argmax(gaps)])
    class_gap = float(ev[n_classes] - ev[n_classes - 1])
    return GapSelection(k=k, gaps=gaps, k_min=k_min, k_max=k_max, class_gap=class_gap)
