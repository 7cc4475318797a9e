"""Rule construction, both weight methods, persistence."""

import numpy as np
import pytest

from ratkit import kernels
from ratkit.qraaa import QrAaaOptions
from ratkit.quadrature import FunctionFamily, QuadratureRule, apply_rule, \
    build_rule, sample_grid, validate_rule


def _poly_family(max_power=8):
    powers = list(range(max_power + 1))
    return FunctionFamily(
        name='monomials',
        parameter_grid=powers,
        sampler=lambda k, x: np.asarray(x) ** k,
        exact_integrals=lambda k: 1.0 / (k + 1.0))


def _const_family():
    return FunctionFamily(
        name='constant',
        parameter_grid=[0],
        sampler=lambda _, x: np.ones_like(np.asarray(x, dtype=float)),
        exact_integrals=lambda _: 1.0)


class TestSampleGrid:
    def test_chebyshev_avoids_origin(self):
        g = sample_grid('chebyshev')
        assert g.min() > 0.0
        assert g.max() <= 1.0
        assert np.all(np.diff(g) > 0)

    def test_legendre_strictly_interior(self):
        g = sample_grid('legendre')
        assert g.min() > 0.0
        assert g.max() < 1.0

    def test_cluster_points_reach_target(self):
        g = sample_grid('chebyshev', cluster_target=1e-8)
        assert g.min() <= 1e-7

    def test_unknown_kind_raises(self):
        with pytest.raises(ValueError, match='grid kind'):
            sample_grid('equispaced')


class TestBuildRule:
    def test_constant_family_single_node_unit_weight(self):
        rule, rep = build_rule(_const_family(), np.linspace(0.01, 1.0, 200),
                               QrAaaOptions(tol_aaa=1e-10, tol_qr=1e-10))
        assert len(rule.nodes) == 1
        np.testing.assert_allclose(rule.weights.sum(), 1.0, atol=1e-12)

    @pytest.mark.parametrize('method', ['gk', 'exact'])
    def test_reproduces_polynomial_integrals(self, method):
        fam = _poly_family()
        grid = np.linspace(0.005, 1.0, 400)
        rule, rep = build_rule(fam, grid,
                               QrAaaOptions(tol_aaa=1e-12, tol_qr=1e-12),
                               method=method)
        assert rep.fit.converged
        for k in fam.parameter_grid:
            est = apply_rule(rule, lambda x: x ** k)
            assert abs(est - 1.0 / (k + 1.0)) <= 1e-11

    def test_weight_methods_agree_when_rank_suffices(self):
        # with order equal to the numerical rank both strategies solve
        # the same well-posed problem
        fam = _poly_family(6)
        grid = np.linspace(0.005, 1.0, 300)
        opts = QrAaaOptions(tol_aaa=1e-12, tol_qr=1e-12)
        r_gk, _ = build_rule(fam, grid, opts, method='gk')
        r_ex, _ = build_rule(fam, grid, opts, method='exact')
        np.testing.assert_array_equal(r_gk.nodes, r_ex.nodes)
        assert np.abs(r_gk.weights - r_ex.weights).max() <= 1e-8

    def test_nodes_are_fit_supports_inside_interval(self):
        fam = _poly_family()
        rule, _ = build_rule(fam, np.linspace(0.005, 1.0, 300),
                             QrAaaOptions(tol_aaa=1e-10, tol_qr=1e-10))
        assert rule.nodes.min() >= 0.0
        assert rule.nodes.max() <= 1.0
        assert np.all(np.diff(rule.nodes) > 0)

    def test_grid_outside_interval_rejected(self):
        with pytest.raises(ValueError, match='grid'):
            build_rule(_poly_family(), np.linspace(-0.5, 1.0, 100))

    def test_exact_method_needs_exact_integrals(self):
        fam = FunctionFamily('no-exact', [1.0],
                             lambda p, x: np.asarray(x) + p)
        with pytest.raises(ValueError, match='exact'):
            build_rule(fam, np.linspace(0.01, 1.0, 50), method='exact')

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError, match='method'):
            build_rule(_poly_family(), np.linspace(0.01, 1.0, 50),
                       method='simpson')

    def test_gk_failure_names_offending_node(self, monkeypatch):
        from ratkit import quadrature

        def boom(*args, **kwargs):
            raise kernels.GaussKronrodError('budget exhausted')

        monkeypatch.setattr(quadrature.kernels,
                            'adaptive_gauss_kronrod', boom)
        with pytest.raises(kernels.GaussKronrodError,
                           match=r'node .* \(index \d+\)'):
            build_rule(_poly_family(), np.linspace(0.01, 1.0, 100),
                       method='gk')


class TestValidateRule:
    def test_reports_errors_against_references(self):
        fam = _poly_family()
        rule, _ = build_rule(fam, np.linspace(0.005, 1.0, 300),
                             QrAaaOptions(tol_aaa=1e-12, tol_qr=1e-12))
        val = validate_rule(rule, fam)
        assert val['max_error'] <= 1e-11
        assert len(val['errors']) == len(fam.parameter_grid)
        np.testing.assert_allclose(val['references'],
                                   [1.0 / (k + 1) for k in
                                    fam.parameter_grid])

    def test_abs_weight_sum_matches_rule(self):
        fam = _poly_family()
        rule, _ = build_rule(fam, np.linspace(0.005, 1.0, 300),
                             QrAaaOptions(tol_aaa=1e-10, tol_qr=1e-10))
        val = validate_rule(rule, fam)
        np.testing.assert_allclose(val['abs_weight_sum'],
                                   np.abs(rule.weights).sum())

    def test_gk_fallback_when_no_exact_integrals(self):
        fam = FunctionFamily('cosines', [1.0, 2.0],
                             lambda p, x: np.cos(p * np.asarray(x)))
        rule, _ = build_rule(fam, np.linspace(0.005, 1.0, 200),
                             QrAaaOptions(tol_aaa=1e-11, tol_qr=1e-11))
        val = validate_rule(rule, fam)
        np.testing.assert_allclose(val['references'],
                                   [np.sin(1.0), np.sin(2.0) / 2.0],
                                   atol=1e-11)


class TestPersistence:
    def _rule(self):
        fam = _poly_family()
        return build_rule(fam, np.linspace(0.005, 1.0, 300),
                          QrAaaOptions(tol_aaa=1e-10, tol_qr=1e-10))[0]

    def test_csv_round_trip_bit_exact(self, tmp_path):
        rule = self._rule()
        path = tmp_path / 'rule.csv'
        rule.to_csv(str(path))
        back = QuadratureRule.from_csv(str(path))
        np.testing.assert_array_equal(back.nodes, rule.nodes)
        np.testing.assert_array_equal(back.weights, rule.weights)

    def test_json_round_trip_with_metadata(self, tmp_path):
        rule = self._rule()
        path = tmp_path / 'rule.json'
        rule.to_json(str(path), metadata={'family': 'monomials'})
        back = QuadratureRule.from_json(path.read_text())
        np.testing.assert_array_equal(back.nodes, rule.nodes)
        np.testing.assert_array_equal(back.weights, rule.weights)

    def test_validation_on_construction(self):
        with pytest.raises(ValueError, match='distinct'):
            QuadratureRule(np.array([0.5, 0.5]), np.array([1.0, 1.0]), 'gauss_kronrod')
        with pytest.raises(ValueError, match='inside'):
            QuadratureRule(np.array([0.5, 1.5]), np.array([1.0, 1.0]), 'gauss_kronrod')
        with pytest.raises(ValueError, match='method'):
            QuadratureRule(np.array([0.5]), np.array([1.0]),
                           method='trapezoid')


class TestApplyRule:
    def test_linearity(self):
        rule = QuadratureRule(np.array([0.25, 0.75]), np.array([0.5, 0.5]),
                              'gauss_kronrod')
        f = lambda x: 2.0 * x
        g = lambda x: np.ones_like(x)
        lhs = apply_rule(rule, lambda x: f(x) + 3.0 * g(x))
        rhs = apply_rule(rule, f) + 3.0 * apply_rule(rule, g)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-14)
