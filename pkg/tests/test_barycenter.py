import dataclasses

import numpy as np
import pytest

from seot.barycenter import (
    Barycenter,
    BarycenterConfig,
    assign_atom_labels,
    attach_target,
    fit_barycenter,
)
from seot.errors import InvalidInput, UnsupportedCost
from seot.measures import LabeledDomain, cost_matrix, uniform_measure
from seot.ot import SinkhornConfig, exact_ot_oracle, sinkhorn
from conftest import raw_plan

OT = SinkhornConfig(epsilon=1e-2, max_iter=50_000, tol=1e-9)


def labeled(points, labels):
    return LabeledDomain(uniform_measure(np.asarray(points, float)), np.asarray(labels))


def separated_points(rng, n, d=2, min_gap=1.0):
    pts = []
    while len(pts) < n:
        cand = rng.uniform(-4, 4, size=d)
        if all(np.linalg.norm(cand - p) >= min_gap for p in pts):
            pts.append(cand)
    return np.asarray(pts)


class TestFitExamples:
    def test_two_dirac_midpoint(self):
        s1 = labeled([[0.0]], [0])
        s2 = labeled([[2.0]], [0])
        bary = fit_barycenter([s1, s2], BarycenterConfig(n_atoms=1, seed=0), OT)
        assert abs(bary.support[0, 0] - 1.0) <= 1e-6

    def test_three_dirac_mean(self):
        sources = [labeled([[0.0, 0.0]], [0]), labeled([[3.0, 0.0]], [0]), labeled([[0.0, 3.0]], [0])]
        bary = fit_barycenter(sources, BarycenterConfig(n_atoms=1, seed=0), OT)
        np.testing.assert_allclose(bary.support, [[1.0, 1.0]], atol=1e-6)

    def test_self_barycenter_recovers_support(self, rng):
        pts = separated_points(rng, 5)
        dom = labeled(pts, [0, 1, 0, 1, 0])
        bary = fit_barycenter([dom, dom], BarycenterConfig(n_atoms=5, seed=3), OT)
        d2 = ((bary.support[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        assert np.sqrt(d2.min(axis=1)).max() <= 1e-3
        assert np.sqrt(d2.min(axis=0)).max() <= 1e-3


class TestFitContract:
    def test_objective_trace_non_increasing(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            sources = [
                labeled(
                    np.vstack([rng.uniform(-3, 3, 2) + 0.3 * rng.standard_normal((8, 2)) for _ in range(2)]),
                    np.repeat([0, 1], 8),
                )
                for _ in range(2)
            ]
            bary = fit_barycenter(sources, BarycenterConfig(n_atoms=4, seed=seed), OT)
            diffs = np.diff(bary.objective_trace)
            assert diffs.size == 0 or diffs.max() <= 1e-9

    def test_translation_equivariance(self, rng):
        pts = separated_points(rng, 6)
        labels = [0, 1, 0, 1, 0, 1]
        shift = np.array([2.5, -1.0])
        cfg = BarycenterConfig(n_atoms=6, seed=11)
        base = fit_barycenter([labeled(pts, labels)], cfg, OT)
        moved = fit_barycenter([labeled(pts + shift, labels)], cfg, OT)
        np.testing.assert_allclose(moved.support, base.support + shift, atol=1e-6)

    def test_row_marginals_are_uniform(self, rng):
        pts = separated_points(rng, 6)
        dom = labeled(pts, [0, 1, 0, 1, 0, 1])
        bary = fit_barycenter([dom], BarycenterConfig(n_atoms=3, seed=2), OT)
        for plan in bary.plans_to_sources:
            rows = plan.gamma.sum(axis=1)
            assert np.abs(rows - 1.0 / 3.0).sum() <= OT.tol

    def test_stored_support_matches_stored_plans(self, rng):
        # the trace and plans must correspond to the returned support
        pts = separated_points(rng, 5)
        dom = labeled(pts, [0, 1, 0, 1, 0])
        bary = fit_barycenter([dom], BarycenterConfig(n_atoms=3, seed=4, max_outer_iter=3), OT)
        plan = sinkhorn(
            bary.measure(), dom.measure, cost_matrix(bary.support, pts, 2.0), OT
        )
        assert abs(plan.cost - bary.plans_to_sources[0].cost) <= 1e-8


class TestFitErrors:
    def test_empty_sources(self):
        with pytest.raises(InvalidInput):
            fit_barycenter([], BarycenterConfig(), OT)

    def test_too_many_atoms(self):
        dom = labeled([[0.0], [1.0]], [0, 1])
        with pytest.raises(InvalidInput):
            fit_barycenter([dom], BarycenterConfig(n_atoms=3), OT)

    def test_non_quadratic_cost_rejected(self):
        dom = labeled([[0.0], [1.0]], [0, 1])
        with pytest.raises(UnsupportedCost):
            fit_barycenter([dom], BarycenterConfig(n_atoms=2), OT, cost_p=1.5)

    def test_unlabeled_source_rejected(self):
        dom = LabeledDomain(uniform_measure([[0.0], [1.0]]))
        with pytest.raises(InvalidInput):
            fit_barycenter([dom], BarycenterConfig(n_atoms=2), OT)

    def test_atoms_below_class_count_rejected(self):
        dom = labeled([[0.0], [1.0], [2.0]], [0, 1, 2])
        with pytest.raises(InvalidInput):
            fit_barycenter([dom], BarycenterConfig(n_atoms=2), OT)


def stub_barycenter(plans, source_weights=None, support=None):
    n_b = plans[0].shape[0]
    ns = len(plans)
    return Barycenter(
        support=np.zeros((n_b, 1)) if support is None else np.asarray(support, float),
        weights=np.full(n_b, 1.0 / n_b),
        atom_labels=np.zeros(n_b, dtype=np.int64),
        plans_to_sources=tuple(raw_plan(p) for p in plans),
        source_weights=np.full(ns, 1.0 / ns) if source_weights is None else source_weights,
        objective_trace=np.zeros(1),
        transport_cost_trace=np.zeros(1),
    )


class TestAtomLabels:
    def test_unanimous_mass(self):
        plan = np.array([[0.5, 0.5]])
        bary = stub_barycenter([plan])
        labels = assign_atom_labels(bary, [labeled([[0.0], [1.0]], [1, 1])])
        assert labels.tolist() == [1]

    def test_majority_mass(self):
        plan = np.array([[0.6, 0.4]])
        bary = stub_barycenter([plan])
        labels = assign_atom_labels(bary, [labeled([[0.0], [1.0]], [0, 1])])
        assert labels.tolist() == [0]
        labels = assign_atom_labels(bary, [labeled([[0.0], [1.0]], [1, 0])])
        assert labels.tolist() == [1]

    def test_exact_tie_prefers_smaller_class(self):
        plan = np.array([[0.5, 0.5]])
        bary = stub_barycenter([plan])
        labels = assign_atom_labels(bary, [labeled([[0.0], [1.0]], [2, 0])])
        assert labels.tolist() == [0]

    def test_zero_mass_atom_falls_back_to_nearest(self):
        plans = [np.array([[1.0, 0.0], [0.0, 0.0]])]
        bary = stub_barycenter(plans, support=[[0.0], [9.0]])
        diag = {}
        labels = assign_atom_labels(bary, [labeled([[0.0], [9.0]], [0, 1])], diag)
        assert labels.tolist() == [0, 1]
        assert diag["label_fallback_atoms"] == [1]

    def test_argmax_invariant_to_plan_scaling(self, rng):
        plan = rng.random((4, 6))
        sources = [labeled(rng.standard_normal((6, 1)), rng.integers(0, 3, 6))]
        base = assign_atom_labels(stub_barycenter([plan]), sources)
        scaled = assign_atom_labels(stub_barycenter([plan * 7.3]), sources)
        np.testing.assert_array_equal(base, scaled)


class TestAttachTarget:
    def test_self_transport_is_near_diagonal(self, rng):
        pts = separated_points(rng, 5)
        dom = labeled(pts, [0, 1, 0, 1, 0])
        bary = fit_barycenter([dom, dom], BarycenterConfig(n_atoms=5, seed=3), OT)
        # a target equal to the support makes the diagonal the unique optimum
        target = LabeledDomain(uniform_measure(bary.support.copy()))
        small_eps = SinkhornConfig(epsilon=1e-3, max_iter=100_000, tol=1e-10)
        out = attach_target(bary, target, small_eps)
        np.testing.assert_allclose(
            out.plan_to_target.gamma, np.eye(5) / 5.0, atol=1e-3
        )
        # the permutation oracle agrees: self-transport cost is zero
        oracle = exact_ot_oracle(
            out.measure(),
            target.measure,
            cost_matrix(out.support, target.points, 2.0),
        )
        assert oracle.cost <= 1e-12
        assert out.plan_to_target.cost <= oracle.cost + 1e-3

    def test_single_point_target_forces_column(self, rng):
        pts = separated_points(rng, 4)
        dom = labeled(pts, [0, 1, 0, 1])
        bary = fit_barycenter([dom], BarycenterConfig(n_atoms=4, seed=0), OT)
        out = attach_target(bary, LabeledDomain(uniform_measure([[0.0, 0.0]])), OT)
        np.testing.assert_allclose(out.plan_to_target.gamma[:, 0], bary.weights, atol=1e-9)

    def test_attach_twice_overwrites(self, rng):
        pts = separated_points(rng, 4)
        dom = labeled(pts, [0, 1, 0, 1])
        bary = fit_barycenter([dom], BarycenterConfig(n_atoms=4, seed=0), OT)
        first = attach_target(bary, LabeledDomain(uniform_measure(pts)), OT)
        second = attach_target(first, LabeledDomain(uniform_measure(pts + 1.0)), OT)
        assert second.plans_to_sources is first.plans_to_sources
        assert not np.array_equal(
            first.plan_to_target.gamma, second.plan_to_target.gamma
        )

    def test_dim_mismatch(self, rng):
        pts = separated_points(rng, 4)
        dom = labeled(pts, [0, 1, 0, 1])
        bary = fit_barycenter([dom], BarycenterConfig(n_atoms=4, seed=0), OT)
        with pytest.raises(InvalidInput):
            attach_target(bary, LabeledDomain(uniform_measure([[0.0]])), OT)


class TestConfig:
    def test_source_weights_must_be_simplex(self):
        with pytest.raises(InvalidInput):
            BarycenterConfig(source_weights=np.array([0.6, 0.6]))

    def test_unknown_init_rejected(self):
        with pytest.raises(InvalidInput):
            BarycenterConfig(init="farthest-point")

    def test_custom_source_weights_used(self, rng):
        s1 = labeled([[0.0]], [0])
        s2 = labeled([[1.0]], [0])
        cfg = BarycenterConfig(
            n_atoms=1, seed=0, source_weights=np.array([0.25, 0.75])
        )
        bary = fit_barycenter([s1, s2], cfg, OT)
        assert abs(bary.support[0, 0] - 0.75) <= 1e-6
