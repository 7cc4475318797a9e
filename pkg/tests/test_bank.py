"""Registry of reproducible sample families."""

import numpy as np
import pytest
import scipy.integrate
import scipy.special

from ratkit import bank


class TestRegistry:
    def test_every_listed_family_resolves(self):
        kinds = {
            'f1': 'tensor', 'f2': 'tensor', 'f3': 'tensor', 'f4': 'tensor',
            'hsp': 'transfer', 'nearfield': 'kernel',
            'psi1': 'quadrature', 'psi2': 'quadrature',
            'psi1-sin': 'quadrature', 'psi1-cos': 'quadrature',
            'psi2-powlog': 'quadrature', 'psi2-coslog': 'quadrature',
            'starfish': 'boundary',
        }
        for ident in bank.list_families():
            params = {'scale': 0.1} if ident in ('f1', 'f2', 'f3', 'f4') \
                else {}
            if ident == 'nearfield':
                params = {'n_pairs': 50, 'n_kappa': 30}
            if ident in ('psi1', 'psi2'):
                params = {'n_alpha': 40}
            nf = bank.family(ident, **params)
            assert nf.identifier == ident
            assert nf.kind == kinds[ident]
            assert nf.description

    def test_unknown_identifier(self):
        with pytest.raises(KeyError, match='unknown family'):
            bank.family('psi3')

    def test_mode_unfolding_families(self):
        nf = bank.family('f1-mode2', scale=0.2)
        assert nf.kind == 'matrix'
        points, values = nf.payload
        base = bank.family('f1', scale=0.2).payload
        np.testing.assert_array_equal(points, base.mode_grids[1])
        np.testing.assert_array_equal(values, base.unfold(1))
        with pytest.raises(KeyError, match='out of range'):
            bank.family('f1-mode4', scale=0.2)

    def test_tensor_scale_shrinks_grids(self):
        full = bank.family('f1')
        small = bank.family('f1', scale=0.2)
        assert all(len(g) == 51 for g in full.default_grids)
        assert all(len(g) == 10 for g in small.default_grids)


class TestTensorFamilies:
    def test_f1_values(self):
        nf = bank.family('f1', scale=0.2)
        t = nf.payload
        gx, gy, gz = t.mode_grids
        i, j, k = 2, 5, 7
        assert t.values[i, j, k] == 1.0 / (gx[i] * gy[j] * gz[k] + 2.0)

    def test_f2_delta_parameter(self):
        sharp = bank.family('f2', scale=0.1, delta=2.0 ** -6).payload
        blunt = bank.family('f2', scale=0.1, delta=1.0).payload
        assert np.abs(sharp.values).max() > np.abs(blunt.values).max()
        g = sharp.mode_grids
        mid = [len(x) // 2 for x in g]
        x, y, z = (g[0][mid[0]], g[1][mid[1]], g[2][mid[2]])
        want = 1.0 / np.sqrt(x * x + 2 * y * y + 3 * z * z + 2.0 ** -6)
        np.testing.assert_allclose(sharp.values[tuple(mid)], want,
                                   rtol=1e-14)

    def test_f3_domain_keeps_radicand_nonnegative(self):
        t = bank.family('f3', scale=0.1).payload
        assert np.all(t.values >= 0.0)
        assert t.mode_grids[0].min() == -1.0
        assert t.mode_grids[1].min() == 0.0

    def test_f4_is_four_way(self):
        t = bank.family('f4', scale=0.15).payload
        assert t.ndim == 4


class TestQuadratureFamilies:
    def test_psi1_exact_integrals(self):
        nf = bank.family('psi1', n_alpha=40)
        fam, grid = nf.payload
        assert grid.min() > 0.0 and grid.max() <= 1.0
        for a in (0.0, 2.5, 7.0, 49.0):
            np.testing.assert_allclose(fam.exact_integrals(a),
                                       1.0 / (a + 1.0), rtol=1e-15)
            ref, _ = scipy.integrate.quad(lambda x: x ** a, 0.0, 1.0)
            np.testing.assert_allclose(fam.exact_integrals(a), ref,
                                       atol=1e-12)

    def test_psi2_encodes_log_members_with_negative_parameters(self):
        nf = bank.family('psi2', n_alpha=40, n_beta=10)
        fam, _ = nf.payload
        x = np.linspace(0.01, 1.0, 50)
        beta = 0.25
        p = -1.0 - beta
        np.testing.assert_allclose(fam.sampler(p, x),
                                   x ** beta * np.log(x), rtol=1e-14)
        ref, _ = scipy.integrate.quad(
            lambda u: u ** beta * np.log(u), 0.0, 1.0)
        np.testing.assert_allclose(fam.exact_integrals(p), ref, atol=1e-11)

    def test_closed_form_log_integrals_match_quadrature(self):
        for a in (0.0, 1.5, 4.0):
            ref, _ = scipy.integrate.quad(
                lambda x: x ** a * np.log(x), 0.0, 1.0)
            np.testing.assert_allclose(bank.integral_pow_log(a), ref,
                                       atol=1e-11)
        for a in (0.0, 2.5, 7.0):
            ref, _ = scipy.integrate.quad(
                lambda x: np.cos(a * x) * np.log(x), 0.0, 1.0)
            np.testing.assert_allclose(bank.integral_cos_log(a), ref,
                                       atol=1e-11)

    def test_test_integrand_families_carry_custom_alphas(self):
        nf = bank.family('psi1-sin', alphas=np.array([0.0, 1.0, 2.0]))
        fam, grid = nf.payload
        assert len(fam.parameter_grid) == 3
        x = np.linspace(0.1, 1.0, 9)
        np.testing.assert_allclose(fam.sampler(2.0, x),
                                   x ** 2 * np.sin(x), rtol=1e-14)
        assert nf.exact is None
        assert bank.family('psi2-powlog').exact is bank.integral_pow_log


class TestStarfish:
    def test_boundary_formula(self):
        bx, by = bank.starfish_boundary(np.array([0.0, np.pi / 2.0]))
        np.testing.assert_allclose(bx, [1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(by, [0.0, 1.3], atol=1e-15)

    def test_target_formula(self):
        np.testing.assert_allclose(bank.starfish_target(0.25, 0.25), -1.0,
                                   rtol=1e-15)
        np.testing.assert_allclose(bank.starfish_target(0.5, 0.25), 0.0,
                                   atol=1e-15)

    def test_boundary_family_sample_matrix(self):
        mat, has_grid = bank.family('starfish').sample_matrix()
        assert not has_grid
        assert mat.shape == (500, 4)
        theta, bx, by, tgt = mat.T
        ex, ey = bank.starfish_boundary(theta)
        np.testing.assert_array_equal(bx, ex)
        np.testing.assert_array_equal(tgt, bank.starfish_target(bx, by))


class TestTransfer:
    def test_matches_pole_residue_sum(self):
        tr = bank.synthetic_transfer(seed=5, n_poles=4)
        s = 1j * np.logspace(0.0, 4.0, 7)
        p = np.logspace(-1.5, 0.0, 5)
        g = np.log(p / 10.0 ** -1.5) / np.log(1.0 / 10.0 ** -1.5)
        manual = np.zeros((7, 5), dtype=complex)
        for k in range(4):
            pole = tr.pole_base[k] * (1.0 + tr.pole_drift[k] * g[None, :])
            res = tr.residue_base[k] * (1.0 + tr.residue_drift[k]
                                        * g[None, :])
            manual += res / (s[:, None] - pole)
        tensor = tr.sample(s, p)
        np.testing.assert_allclose(tensor.values, manual, rtol=1e-13)

    def test_seeded_determinism(self):
        a = bank.synthetic_transfer(seed=7, n_poles=6)
        b = bank.synthetic_transfer(seed=7, n_poles=6)
        c = bank.synthetic_transfer(seed=8, n_poles=6)
        np.testing.assert_array_equal(a.pole_base, b.pole_base)
        assert not np.array_equal(a.pole_base, c.pole_base)

    def test_poles_stay_off_the_imaginary_axis(self):
        tr = bank.synthetic_transfer(seed=0, n_poles=50)
        for p in (10.0 ** -1.5, 0.3, 1.0):
            assert np.all(tr.poles_at(p).real < 0.0)

    def test_default_grids(self):
        s, p = bank.transfer_default_grids(n_s=10, n_p=4)
        assert len(s) == 10 and len(p) == 4
        np.testing.assert_allclose([abs(s[0]), abs(s[-1])], [1.0, 1e4])
        np.testing.assert_allclose([p[0], p[-1]], [10.0 ** -1.5, 1.0])
        assert np.all(s.real == 0.0)


class TestNearField:
    def test_entries_follow_kernel_formula(self):
        nf = bank.nearfield_family(seed=2, n_pairs=40, n_kappa=25)
        mat = nf.matrix()
        want = np.exp(1j * nf.kappa[:, None] * nf.distances[None, :]) \
            / (4.0 * np.pi * nf.distances[None, :])
        np.testing.assert_allclose(mat, want, rtol=1e-15)

    def test_pairs_sit_on_unit_sphere_at_requested_chords(self):
        nf = bank.nearfield_family(seed=2, n_pairs=200, n_kappa=5)
        norms = np.linalg.norm(nf.pairs, axis=2)
        np.testing.assert_allclose(norms, 1.0, rtol=1e-12)
        d = np.linalg.norm(nf.pairs[:, 0] - nf.pairs[:, 1], axis=1)
        np.testing.assert_allclose(d, nf.distances, rtol=1e-12)
        assert nf.distances.min() >= 0.05
        assert nf.distances.max() <= 0.35

    def test_seeded_determinism(self):
        a = bank.nearfield_family(seed=3, n_pairs=30, n_kappa=10)
        b = bank.nearfield_family(seed=3, n_pairs=30, n_kappa=10)
        c = bank.nearfield_family(seed=4, n_pairs=30, n_kappa=10)
        np.testing.assert_array_equal(a.distances, b.distances)
        assert not np.array_equal(a.distances, c.distances)

    def test_matrix_accepts_custom_kappa(self):
        nf = bank.nearfield_family(seed=2, n_pairs=10, n_kappa=5)
        k = np.array([2.0, 3.0])
        assert nf.matrix(k).shape == (2, 10)


class TestBessel:
    def test_against_scipy(self):
        # crosses the series/asymptotic switch at 12
        x = np.linspace(0.05, 40.0, 700)
        assert np.abs(bank.bessel_j0(x) - scipy.special.j0(x)).max() <= 1e-11
        assert np.abs(bank.bessel_y0(x) - scipy.special.y0(x)).max() <= 1e-11

    def test_y0_rejects_nonpositive(self):
        with pytest.raises(ValueError, match='positive'):
            bank.bessel_y0(np.array([0.0, 1.0]))


class TestSampleMatrix:
    def test_quadrature_family_prepends_grid(self):
        nf = bank.family('psi1-sin', alphas=np.linspace(0.0, 10.0, 6))
        mat, has_grid = nf.sample_matrix()
        assert has_grid
        fam, grid = nf.payload
        assert mat.shape == (len(grid), 7)
        np.testing.assert_array_equal(mat[:, 0], grid)
        np.testing.assert_array_equal(mat[:, 3], fam.sampler(
            fam.parameter_grid[2], grid))

    def test_max_cols_truncates_value_columns(self):
        nf = bank.family('f1-mode1', scale=0.2)
        mat, _ = nf.sample_matrix(max_cols=4)
        assert mat.shape[1] == 5

    def test_kernel_family_uses_complex_grid_column(self):
        nf = bank.family('nearfield', n_pairs=12, n_kappa=8)
        mat, has_grid = nf.sample_matrix(max_cols=3)
        assert has_grid
        assert mat.shape == (8, 4)
        assert np.iscomplexobj(mat)
        np.testing.assert_array_equal(mat[:, 0].real, nf.payload.kappa)

    def test_transfer_family_samples_default_grids(self):
        nf = bank.family('hsp', seed=1, n_poles=5)
        mat, has_grid = nf.sample_matrix()
        s, p = nf.default_grids
        assert has_grid
        assert mat.shape == (len(s), len(p) + 1)
        np.testing.assert_array_equal(mat[:, 0], s)
