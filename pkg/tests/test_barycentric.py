"""Barycentric representation: evaluation, poles, serialization."""

import numpy as np
import pytest

from ratkit.barycentric import VectorRational, barycentric_matrix, \
    cardinal_rows


def _random_rational(rng, m=5, n=3, complex_field=False):
    sup = np.sort(rng.uniform(-1.0, 1.0, m))
    if complex_field:
        w = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        vals = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    else:
        w = rng.standard_normal(m)
        vals = rng.standard_normal((m, n))
    return VectorRational(sup, w, vals)


class TestConstruction:
    def test_weights_are_normalized(self):
        r = VectorRational([0.0, 1.0], [3.0, 4.0], [[1.0], [2.0]])
        np.testing.assert_allclose(np.linalg.norm(r.weights), 1.0,
                                   atol=1e-15)
        np.testing.assert_allclose(r.weights, [0.6, 0.8])

    def test_duplicate_supports_raise(self):
        with pytest.raises(ValueError, match='distinct'):
            VectorRational([0.5, 0.5], [1.0, 1.0], [[1.0], [2.0]])

    def test_zero_weights_raise(self):
        with pytest.raises(ValueError):
            VectorRational([0.0, 1.0], [0.0, 0.0], [[1.0], [2.0]])

    def test_degree_and_component_count(self):
        r = _random_rational(np.random.default_rng(0), m=7, n=4)
        assert r.degree == 6
        assert r.ncomponents == 4


class TestEvaluation:
    def test_interpolates_stored_rows(self):
        r = _random_rational(np.random.default_rng(1))
        got = r.eval_many(r.support_points)
        np.testing.assert_allclose(got, r.support_values, atol=1e-13)

    def test_matches_direct_barycentric_formula(self):
        rng = np.random.default_rng(2)
        r = _random_rational(rng, m=6, n=2, complex_field=True)
        z = rng.uniform(-0.95, 0.95, 40)
        c = 1.0 / (z[:, None] - r.support_points[None, :])
        num = (c * r.weights[None, :]) @ r.support_values
        den = c @ r.weights
        np.testing.assert_allclose(r.eval_many(z), num / den[:, None],
                                   atol=1e-12)

    def test_scalar_call_returns_vector(self):
        r = _random_rational(np.random.default_rng(3), n=3)
        out = r(0.123)
        assert out.shape == (3,)

    def test_pole_mask_marks_denominator_zeros(self):
        # equal weights put a denominator zero midway between supports
        r = VectorRational([-1.0, 1.0], [1.0, 1.0], [[1.0], [2.0]])
        vals, mask = r.eval_many(np.array([0.0, 0.5]),
                                 return_pole_mask=True)
        assert mask[0] and not mask[1]
        assert np.isinf(vals[0, 0])
        assert np.isfinite(vals[1, 0])

    def test_poles_match_root_finding_oracle(self):
        rng = np.random.default_rng(4)
        r = _random_rational(rng, m=5, n=1)
        # den has numerator sum_j w_j prod_{k != j} (z - z_k) after
        # clearing denominators; its roots are the poles
        coeffs = np.zeros(5, dtype=complex)
        for j in range(5):
            others = np.delete(r.support_points, j)
            coeffs = coeffs + r.weights[j] * np.poly(others)
        expected = np.sort_complex(np.roots(coeffs))
        got = np.sort_complex(r.poles())
        np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_pole_count_is_degree(self):
        r = _random_rational(np.random.default_rng(5), m=6)
        assert len(r.poles()) == 5


class TestCardinalRows:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(6)
        sup = np.array([-0.8, -0.1, 0.4, 0.9])
        w = rng.standard_normal(4)
        z = rng.uniform(-1.0, 1.0, 30)
        h, mask = cardinal_rows(z, sup, w)
        assert not mask.any()
        np.testing.assert_allclose(h.sum(axis=1), np.ones(30), atol=1e-12)

    def test_unit_rows_at_supports(self):
        sup = np.array([-0.5, 0.0, 0.5])
        h, _ = cardinal_rows(sup, sup, np.array([1.0, 2.0, -1.0]))
        np.testing.assert_allclose(h, np.eye(3), atol=1e-15)


class TestBarycentricMatrix:
    def test_row_sums_and_interpolative_identity(self):
        rng = np.random.default_rng(7)
        r = _random_rational(rng, m=6, n=4)
        z = np.union1d(r.support_points, rng.uniform(-1.0, 1.0, 50))
        h = barycentric_matrix(r, z)
        np.testing.assert_allclose(h.entries.sum(axis=1), np.ones(len(z)),
                                   atol=1e-12)
        # reconstruction through the cardinal matrix equals evaluation
        np.testing.assert_allclose(h.entries @ r.support_values,
                                   r.eval_many(z), atol=1e-12)

    def test_support_indices_located_on_grid(self):
        rng = np.random.default_rng(11)
        r = _random_rational(rng, m=4, n=1)
        z = np.union1d(r.support_points, rng.uniform(-1.0, 1.0, 20))
        h = barycentric_matrix(r, z)
        for v, idx in enumerate(h.support_indices):
            assert idx >= 0
            assert z[idx] == r.support_points[v]
            np.testing.assert_allclose(h.entries[idx],
                                       np.eye(4)[v], atol=1e-15)

    def test_lebesgue_like_constant_at_least_one(self):
        r = _random_rational(np.random.default_rng(12))
        h = barycentric_matrix(r, np.linspace(-1.0, 1.0, 64))
        assert h.lebesgue_like_constant() >= 1.0 - 1e-12


class TestSerialization:
    @pytest.mark.parametrize('complex_field', [False, True])
    def test_dict_round_trip(self, complex_field):
        rng = np.random.default_rng(8)
        r = _random_rational(rng, complex_field=complex_field)
        back = VectorRational.from_dict(r.to_dict())
        np.testing.assert_array_equal(back.support_points, r.support_points)
        np.testing.assert_array_equal(back.weights, r.weights)
        np.testing.assert_array_equal(back.support_values, r.support_values)
        assert back.is_real == r.is_real

    def test_json_round_trip_preserves_evaluation(self, tmp_path):
        rng = np.random.default_rng(9)
        r = _random_rational(rng, complex_field=True)
        path = tmp_path / 'model.json'
        r.to_json(str(path))
        back = VectorRational.from_json(path.read_text())
        z = rng.uniform(-1.0, 1.0, 20)
        np.testing.assert_array_equal(back.eval_many(z), r.eval_many(z))

    def test_json_deterministic(self):
        r = _random_rational(np.random.default_rng(10))
        assert r.to_json() == r.to_json()
