"""Shared fixtures and small oracle helpers for the test suite."""

import numpy as np
import pytest

from seot.graph import CrossDomainGraph, bipartite_graph
from seot.ot import TransportPlan


def raw_plan(gamma, epsilon=1.0) -> TransportPlan:
    """Wrap a raw coupling array in a TransportPlan for graph construction."""
    gamma = np.asarray(gamma, dtype=np.float64)
    return TransportPlan(
        gamma=gamma,
        cost=0.0,
        iterations=0,
        marginal_error=0.0,
        epsilon=epsilon,
        converged=True,
    )


def graph_from_plan(gamma, prune_threshold=0.0) -> CrossDomainGraph:
    return bipartite_graph(raw_plan(gamma), prune_threshold)


def dense_laplacian(graph, self_loops=True) -> np.ndarray:
    """Independent dense normalized Laplacian for oracle comparisons."""
    n = graph.n_nodes
    A = np.zeros((n, n))
    for i, j, w in zip(graph.rows, graph.cols, graph.weights):
        A[i, j] += w
        A[j, i] += w
    d = A.sum(axis=1)
    if self_loops:
        iso = d == 0
        A[iso, iso] = 1.0
        d[iso] = 1.0
    dm = 1.0 / np.sqrt(d)
    return np.eye(n) - (dm[:, None] * A * dm[None, :])


def random_sparse_plan(rng, n_s, n_t, density=0.15):
    """Random nonnegative plan-like matrix with many exact zeros."""
    gamma = rng.random((n_s, n_t))
    gamma[rng.random((n_s, n_t)) > density] = 0.0
    total = gamma.sum()
    if total == 0:
        gamma[0, 0] = 1.0
        total = 1.0
    return gamma / total


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
