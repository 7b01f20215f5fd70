"""Cross-domain graphs assembled from transport plans.

A transport plan between two domains is read as the weighted biadjacency of a
bipartite graph; in the multi-source setting one plan per domain hangs off the
shared barycenter block, so every edge has a barycenter endpoint (star
layout). Only the upper triangle is stored; the full symmetric matrix is
materialized on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateGraph, InvalidInput, InvalidState, ShapeError
from .ot import TransportPlan

# Entries below this fraction of a plan's max entry are dropped at assembly.
DEFAULT_PRUNE = 1e-9


@dataclass(frozen=True)
class NodeRange:
    """Contiguous block of node indices belonging to one domain."""

    domain_id: str
    start: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + self.length

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop)


@dataclass(frozen=True)
class CrossDomainGraph:
    """Sparse symmetric adjacency over all domains' nodes.

    `rows`/`cols`/`weights` hold the strict upper triangle once; `nnz` counts
    those stored (undirected) edges. Node ranges are contiguous, disjoint and
    cover 0..n_nodes-1 in order.
    """

    n_nodes: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    node_ranges: tuple[NodeRange, ...]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        if not (rows.shape == cols.shape == w.shape) or rows.ndim != 1:
            raise ShapeError("edge arrays must be 1-D and equal length")
        if rows.size and (rows.min() < 0 or cols.max() >= self.n_nodes):
            raise InvalidInput("edge endpoint outside 0..n_nodes-1")
        if np.any(rows >= cols):
            raise InvalidInput("edges must be stored as strict upper triangle")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise InvalidInput("edge weights must be finite and positive")
        covered = 0
        starts = []
        for r in self.node_ranges:
            if r.start != covered or r.length < 0:
                raise InvalidInput("node ranges must be contiguous and ordered")
            starts.append(r.start)
            covered = r.stop
        if covered != self.n_nodes:
            raise InvalidInput("node ranges must cover all nodes")
        if rows.size:
            boundaries = np.asarray(starts[1:])
            block_r = np.searchsorted(boundaries, rows, side="right")
            block_c = np.searchsorted(boundaries, cols, side="right")
            if np.any(block_r == block_c):
                raise InvalidInput("intra-domain edges are not allowed")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", w)

    @property
    def nnz(self) -> int:
        return int(self.weights.shape[0])

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Full symmetric adjacency (both triangles) in CSR form."""
        upper = sp.coo_matrix(
            (self.weights, (self.rows, self.cols)),
            shape=(self.n_nodes, self.n_nodes),
        )
        return (upper + upper.T).tocsr()

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n_nodes)
        np.add.at(d, self.rows, self.weights)
        np.add.at(d, self.cols, self.weights)
        return d

    def isolated_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.degrees == 0)

    def range_of(self, domain_id: str) -> NodeRange:
        for r in self.node_ranges:
            if r.domain_id == domain_id:
                return r
        raise InvalidInput(f"no node range named {domain_id!r}")


def _pruned_entries(gamma: np.ndarray, prune_threshold: float):
    """Indices and values of plan entries above the relative threshold."""
    peak = gamma.max() if gamma.size else 0.0
    effective = prune_threshold * peak
    i, j = np.nonzero(gamma > effective)
    return i, j, gamma[i, j]


def bipartite_graph(
    plan: TransportPlan, prune_threshold: float = DEFAULT_PRUNE
) -> CrossDomainGraph:
    """Two-domain graph with adjacency blocks [[0, plan], [plan^T, 0]].

    `prune_threshold` is relative to the plan's largest entry; pass 0 to keep
    every strictly positive entry.
    """
    n_s, n_t = plan.gamma.shape
    i, j, w = _pruned_entries(plan.gamma, prune_threshold)
    if w.size == 0:
        raise DegenerateGraph("plan has no entries above the prune threshold")
    ranges = (
        NodeRange("source:0", 0, n_s),
        NodeRange("target", n_s, n_t),
    )
    return CrossDomainGraph(
        n_nodes=n_s + n_t,
        rows=i,
        cols=j + n_s,
        weights=w,
        node_ranges=ranges,
    )


def star_graph(
    bary,
    n_sources: int,
    n_target: int,
    prune_threshold: float = DEFAULT_PRUNE,
) -> CrossDomainGraph:
    """Multi-source graph routing all inter-domain edges through the barycenter.

    Node layout: barycenter block first, then each source block in order,
    then the target block. Entries of each plan are pruned relative to that
    plan's max entry before assembly. Isolated nodes are kept so indices stay
    stable; their treatment is a Laplacian policy.
    """
    if bary.plan_to_target is None:
        raise InvalidState("barycenter has no target plan; call attach_target first")
    if len(bary.plans_to_sources) != n_sources:
        raise InvalidInput(
            f"expected {n_sources} source plans, found {len(bary.plans_to_sources)}"
        )
    if bary.plan_to_target.gamma.shape[1] != n_target:
        raise ShapeError(
            f"target plan has {bary.plan_to_target.gamma.shape[1]} columns, "
            f"expected {n_target}"
        )
    n_b = bary.support.shape[0]
    ranges = [NodeRange("barycenter", 0, n_b)]
    offset = n_b
    rows, cols, weights = [], [], []
    blocks = list(bary.plans_to_sources) + [bary.plan_to_target]
    names = [f"source:{i}" for i in range(n_sources)] + ["target"]
    for name, plan in zip(names, blocks):
        if plan.gamma.shape[0] != n_b:
            raise ShapeError(
                f"plan {name} has {plan.gamma.shape[0]} rows, expected {n_b}"
            )
        width = plan.gamma.shape[1]
        i, j, w = _pruned_entries(plan.gamma, prune_threshold)
        rows.append(i)
        cols.append(j + offset)
        weights.append(w)
        ranges.append(NodeRange(name, offset, width))
        offset += width
    weights = np.concatenate(weights)
    if weights.size == 0:
        raise DegenerateGraph("all plan entries fell below the prune threshold")
    return CrossDomainGraph(
        n_nodes=offset,
        rows=np.concatenate(rows),
        cols=np.concatenate(cols),
        weights=weights,
        node_ranges=tuple(ranges),
    )


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx


def components(graph: CrossDomainGraph) -> int:
    """Number of connected components; isolated nodes count as components."""
    uf = _UnionFind(graph.n_nodes)
    for i, j in zip(graph.rows.tolist(), graph.cols.tolist()):
        uf.union(i, j)
    return len({uf.find(i) for i in range(graph.n_nodes)})


def write_edge_list(graph: CrossDomainGraph, path) -> None:
    """Debug export: one `i<TAB>j<TAB>w` line per stored edge."""
    with open(path, "w") as fh:
        fh.write(f"# K={graph.n_nodes} nnz={graph.nnz}\n")
        for i, j, w in zip(graph.rows, graph.cols, graph.weights):
            fh.write(f"{i}\t{j}\t{w:.17g}\n")
