import numpy as np
import pytest
import scipy.linalg

from conftest import dense_laplacian, graph_from_plan, random_sparse_plan
from seot.errors import InvalidInput, IterativeSolverError
from seot.graph import components
from seot.spectral import (
    DROP,
    SELF_LOOP,
    embed,
    laplacian,
    select_k,
    smallest_eigenpairs,
)


def k22_graph():
    return graph_from_plan(np.full((2, 2), 0.25))


def principal_angle_gap(U, V):
    """Largest principal angle sine between two subspaces (columns)."""
    qu, _ = np.linalg.qr(U)
    qv, _ = np.linalg.qr(V)
    sv = np.linalg.svd(qu.T @ qv, compute_uv=False)
    return np.sqrt(max(0.0, 1.0 - sv.min() ** 2))


class TestLaplacianOperator:
    def test_kernel_direction_maps_to_zero(self):
        g = k22_graph()
        op = laplacian(g)
        v = np.sqrt(g.degrees)
        assert np.abs(op.apply(v)).max() <= 1e-12

    def test_single_edge_dense_form(self):
        g = graph_from_plan([[1.0]])
        op = laplacian(g)
        dense = np.column_stack([op.apply(e) for e in np.eye(2)])
        np.testing.assert_allclose(dense, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-15)
        vals = np.linalg.eigvalsh(dense)
        np.testing.assert_allclose(vals, [0.0, 2.0], atol=1e-12)

    def test_isolated_node_self_loop_acts_as_zero(self):
        plan = np.array([[0.9, 1e-15]])
        g = graph_from_plan(plan, prune_threshold=1e-6)
        assert g.isolated_nodes().size == 1
        op = laplacian(g, SELF_LOOP)
        iso = g.isolated_nodes()[0]
        indicator = np.zeros(g.n_nodes)
        indicator[iso] = 1.0
        assert np.abs(op.apply(indicator)).max() <= 1e-15

    def test_drop_policy_returns_index_map(self):
        plan = np.array([[0.9, 1e-15]])
        g = graph_from_plan(plan, prune_threshold=1e-6)
        op = laplacian(g, DROP)
        assert op.size == g.n_nodes - 1
        assert op.kept is not None
        assert g.isolated_nodes()[0] not in op.kept

    def test_unknown_policy(self):
        with pytest.raises(InvalidInput):
            laplacian(k22_graph(), "banish")


class TestSmallestEigenpairs:
    def test_complete_bipartite_spectrum(self):
        # dense oracle for K_{2,2}: eigenvalues {0, 1, 1, 2}
        g = k22_graph()
        op = laplacian(g)
        vals, vecs = smallest_eigenpairs(op, 4, tol=1e-10, seed=0)
        dense_vals = np.linalg.eigvalsh(dense_laplacian(g))
        np.testing.assert_allclose(vals, dense_vals, atol=1e-8)
        np.testing.assert_allclose(vals, [0.0, 1.0, 1.0, 2.0], atol=1e-8)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(4), atol=1e-8)

    def test_two_disjoint_edges(self):
        g = graph_from_plan(np.diag([0.5, 0.5]))
        op = laplacian(g)
        vals, _ = smallest_eigenpairs(op, 4, tol=1e-10, seed=1)
        np.testing.assert_allclose(vals, [0.0, 0.0, 2.0, 2.0], atol=1e-8)

    def test_smallest_eigenvalue_is_zero(self, rng):
        gamma = random_sparse_plan(rng, 12, 9)
        op = laplacian(graph_from_plan(gamma))
        vals, _ = smallest_eigenpairs(op, 1, seed=2)
        assert vals[0] <= 1e-8

    def test_m_exceeding_size_rejected(self):
        op = laplacian(k22_graph())
        with pytest.raises(InvalidInput):
            smallest_eigenpairs(op, 5)

    def test_budget_exhaustion_raises_with_residuals(self, rng):
        gamma = random_sparse_plan(rng, 40, 40, density=0.4)
        op = laplacian(graph_from_plan(gamma))
        with pytest.raises(IterativeSolverError) as err:
            smallest_eigenpairs(op, 6, tol=1e-32, max_iter=12, seed=0)
        assert err.value.residuals is not None

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_dense_oracle_random(self, seed):
        rng = np.random.default_rng(seed)
        gamma = random_sparse_plan(rng, rng.integers(8, 40), rng.integers(8, 40))
        g = graph_from_plan(gamma)
        op = laplacian(g)
        c = components(g)
        m = min(g.n_nodes, c + 3)
        vals, vecs = smallest_eigenpairs(op, m, tol=1e-9, seed=seed)
        dense_vals, dense_vecs = np.linalg.eigh(dense_laplacian(g))
        np.testing.assert_allclose(vals, dense_vals[:m], atol=1e-6)
        assert vals.min() >= -1e-8
        assert vals.max() <= 2.0 + 1e-8
        # zero-eigenvalue multiplicity equals the union-find component count
        assert int((vals < 1e-8).sum()) == min(c, m)
        if m < g.n_nodes and dense_vals[m] - dense_vals[m - 1] > 1e-6:
            assert principal_angle_gap(vecs, dense_vecs[:, :m]) <= 1e-5


class TestEmbed:
    def test_three_components_have_constant_rows(self):
        gamma = np.zeros((6, 6))
        gamma[:2, :2] = 1.0
        gamma[2:4, 2:4] = 2.0
        gamma[4:, 4:] = 0.5
        gamma /= gamma.sum()
        g = graph_from_plan(gamma)
        assert components(g) == 3
        emb = embed(laplacian(g), 3, row_normalize=True, seed=5)
        comp_ids = [0, 0, 1, 1, 2, 2, 0, 0, 1, 1, 2, 2]
        rows = emb.features
        for c in range(3):
            members = rows[np.asarray(comp_ids) == c]
            assert np.abs(members - members[0]).max() <= 1e-6
        centers = np.stack([rows[np.asarray(comp_ids) == c][0] for c in range(3)])
        for a in range(3):
            for b in range(a + 1, 3):
                assert np.linalg.norm(centers[a] - centers[b]) > 0.5

    def test_k1_on_connected_graph_is_degree_vector(self):
        g = k22_graph()
        emb = embed(laplacian(g), 1, row_normalize=False, seed=0)
        v = emb.vectors[:, 0]
        ref = np.sqrt(g.degrees)
        ref = ref / np.linalg.norm(ref)
        assert min(np.abs(v - ref).max(), np.abs(v + ref).max()) <= 1e-8

    def test_orthonormal_columns(self):
        emb = embed(laplacian(k22_graph()), 2, seed=3)
        np.testing.assert_allclose(emb.vectors.T @ emb.vectors, np.eye(2), atol=1e-8)

    def test_trace_equals_sum_of_smallest(self, rng):
        gamma = random_sparse_plan(rng, 15, 18)
        g = graph_from_plan(gamma)
        op = laplacian(g)
        emb = embed(op, 4, row_normalize=False, seed=7)
        trace = sum(
            float(emb.vectors[:, i] @ op.apply(emb.vectors[:, i])) for i in range(4)
        )
        assert abs(trace - emb.eigenvalues[:4].sum()) <= 1e-7

    def test_k_bounds(self):
        op = laplacian(k22_graph())
        with pytest.raises(InvalidInput):
            embed(op, 0)
        with pytest.raises(InvalidInput):
            embed(op, 4)

    def test_row_normalized_rows_have_unit_norm(self, rng):
        gamma = random_sparse_plan(rng, 10, 10)
        emb = embed(laplacian(graph_from_plan(gamma)), 3, row_normalize=True, seed=1)
        norms = np.linalg.norm(emb.features, axis=1)
        assert np.all((np.abs(norms - 1.0) <= 1e-12) | (norms == 0.0))

    def test_deterministic_given_seed(self, rng):
        gamma = random_sparse_plan(rng, 12, 12)
        g = graph_from_plan(gamma)
        a = embed(laplacian(g), 3, seed=11)
        b = embed(laplacian(g), 3, seed=11)
        np.testing.assert_array_equal(a.vectors, b.vectors)
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)


class TestSelectK:
    def test_component_multiplicity_forces_gap(self):
        sel = select_k(np.array([0.0, 0.0, 0.0, 0.8, 0.9]), 3, 3, 4)
        assert sel.k == 3
        assert abs(sel.gaps[0] - 0.8) <= 1e-15
        assert abs(sel.class_gap - 0.8) <= 1e-15

    def test_tie_goes_to_smallest(self):
        sel = select_k(np.array([0.0, 0.1, 0.2, 0.3]), 1, 1, 3)
        assert sel.k == 1

    def test_matches_component_count(self, rng):
        gamma = np.zeros((6, 6))
        gamma[:3, :3] = rng.random((3, 3)) + 0.5
        gamma[3:5, 3:5] = rng.random((2, 2)) + 0.5
        gamma[5, 5] = 1.0
        gamma /= gamma.sum()
        g = graph_from_plan(gamma)
        c = components(g)
        vals, _ = smallest_eigenpairs(laplacian(g), min(g.n_nodes, c + 4), seed=3)
        sel = select_k(vals, 2, 2, c + 3)
        assert sel.k == c

    def test_needs_enough_eigenvalues(self):
        with pytest.raises(InvalidInput):
            select_k(np.array([0.0, 0.1]), 1, 1, 2)

    def test_k_min_below_classes_rejected(self):
        with pytest.raises(InvalidInput):
            select_k(np.array([0.0, 0.1, 0.2, 0.3]), 3, 2, 3)
