import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seot.errors import InvalidInput, ShapeError
from seot.measures import (
    DiscreteMeasure,
    LabeledDomain,
    cost_matrix,
    standardize,
    uniform_measure,
)


class TestUniformMeasure:
    def test_three_points(self):
        m = uniform_measure(np.zeros((3, 2)))
        np.testing.assert_allclose(m.weights, [1 / 3, 1 / 3, 1 / 3])

    def test_single_point(self):
        m = uniform_measure(np.zeros((1, 5)))
        np.testing.assert_array_equal(m.weights, [1.0])

    def test_four_points(self):
        m = uniform_measure(np.zeros((4, 1)))
        np.testing.assert_array_equal(m.weights, [0.25, 0.25, 0.25, 0.25])

    def test_empty_rejected(self):
        with pytest.raises(InvalidInput):
            uniform_measure(np.zeros((0, 2)))

    def test_nan_rejected(self):
        with pytest.raises(InvalidInput):
            uniform_measure([[np.nan]])


class TestDiscreteMeasure:
    def test_simplex_exact_after_renormalization(self):
        w = np.full(7, 1 / 7) * (1 + 3e-7)
        m = DiscreteMeasure(np.zeros((7, 1)), w)
        assert abs(m.weights.sum() - 1.0) <= 1e-12
        assert m.weights.min() >= 0

    def test_far_from_simplex_rejected(self):
        with pytest.raises(InvalidInput):
            DiscreteMeasure(np.zeros((2, 1)), [0.7, 0.7])

    def test_negative_weight_rejected(self):
        with pytest.raises(InvalidInput):
            DiscreteMeasure(np.zeros((2, 1)), [1.2, -0.2])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            DiscreteMeasure(np.zeros((3, 1)), [0.5, 0.5])

    @given(st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=1, max_size=20))
    def test_any_positive_vector_normalizes(self, raw):
        w = np.asarray(raw)
        m = DiscreteMeasure(np.zeros((len(raw), 1)), w / w.sum())
        assert abs(m.weights.sum() - 1.0) <= 1e-12
        assert m.weights.min() >= 0


class TestCostMatrix:
    def test_zero_distance(self):
        C = cost_matrix([[0.0]], [[0.0]], 2)
        np.testing.assert_array_equal(C.values, [[0.0]])

    def test_unit_separation_squared(self):
        C = cost_matrix([[0.0], [1.0]], [[0.0], [1.0]], 2)
        np.testing.assert_array_equal(C.values, [[0.0, 1.0], [1.0, 0.0]])

    def test_three_four_five_triangle(self):
        # hand-computed: hypotenuse 5, squared 25
        C = cost_matrix([[0.0, 0.0]], [[3.0, 4.0]], 2)
        np.testing.assert_allclose(C.values, [[25.0]])

    def test_p_one_is_plain_distance(self):
        C = cost_matrix([[0.0, 0.0]], [[3.0, 4.0]], 1)
        np.testing.assert_allclose(C.values, [[5.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            cost_matrix(np.zeros((2, 2)), np.zeros((2, 3)), 2)

    def test_exponent_below_one_rejected(self):
        with pytest.raises(InvalidInput):
            cost_matrix([[0.0]], [[1.0]], 0.5)

    def test_transpose_symmetry(self, rng):
        a = rng.standard_normal((7, 3))
        b = rng.standard_normal((5, 3))
        cab = cost_matrix(a, b, 2).values
        cba = cost_matrix(b, a, 2).values
        assert np.abs(cab - cba.T).max() <= 1e-12

    def test_identical_rows_give_exact_zero(self, rng):
        a = rng.standard_normal((6, 4))
        C = cost_matrix(a, a, 2).values
        assert np.all(np.diag(C) == 0.0)


class TestStandardize:
    def test_single_column(self):
        dom = LabeledDomain(uniform_measure([[0.0], [2.0]]), np.array([0, 1]))
        (out,) = standardize([dom])
        np.testing.assert_allclose(out.points, [[-1.0], [1.0]])

    def test_constant_column_passthrough(self):
        dom = LabeledDomain(uniform_measure([[5.0], [5.0]]))
        (out,) = standardize([dom])
        np.testing.assert_array_equal(out.points, [[5.0], [5.0]])

    def test_idempotent(self, rng):
        dom = LabeledDomain(uniform_measure(rng.standard_normal((40, 3))))
        once = standardize([dom])
        twice = standardize(once)
        assert np.abs(twice[0].points - once[0].points).max() <= 1e-12

    def test_pooled_over_domains(self):
        d1 = LabeledDomain(uniform_measure([[0.0], [0.0]]))
        d2 = LabeledDomain(uniform_measure([[2.0], [2.0]]))
        o1, o2 = standardize([d1, d2])
        # pooled mean 1, population std 1
        np.testing.assert_allclose(o1.points, [[-1.0], [-1.0]])
        np.testing.assert_allclose(o2.points, [[1.0], [1.0]])

    def test_labels_and_shape_preserved(self, rng):
        labels = np.array([0, 1, 1, 0, 2])
        dom = LabeledDomain(uniform_measure(rng.standard_normal((5, 2))), labels)
        (out,) = standardize([dom])
        np.testing.assert_array_equal(out.labels, labels)
        assert out.points.shape == dom.points.shape

    def test_dim_mismatch(self):
        d1 = LabeledDomain(uniform_measure(np.zeros((2, 2))))
        d2 = LabeledDomain(uniform_measure(np.zeros((2, 3))))
        with pytest.raises(ShapeError):
            standardize([d1, d2])


class TestLabeledDomain:
    def test_label_length_checked(self):
        with pytest.raises(ShapeError):
            LabeledDomain(uniform_measure(np.zeros((3, 1))), np.array([0, 1]))

    def test_negative_labels_rejected(self):
        with pytest.raises(InvalidInput):
            LabeledDomain(uniform_measure(np.zeros((2, 1))), np.array([0, -1]))

    def test_unlabeled_allowed(self):
        dom = LabeledDomain(uniform_measure(np.zeros((2, 1))))
        assert dom.labels is None
