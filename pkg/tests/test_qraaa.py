"""Compressed and split/join fitting against the direct engine."""

import numpy as np
import pytest

from ratkit.aaa import FitOptions, sv_aaa
from ratkit.qraaa import QrAaaOptions, hoelder_bound_terms, pqr_aaa, qr_aaa


def _low_rank_family(rng, n_points=160, n_cols=48, rank=5):
    """Smooth columns spanning a numerical rank-``rank`` space."""
    z = np.linspace(-1.0, 1.0, n_points)
    basis = np.column_stack([1.0 / (z + s)
                             for s in rng.uniform(1.3, 3.0, rank)])
    mix = rng.standard_normal((rank, n_cols))
    return z, basis @ mix


class TestQrAaa:
    def test_rank_one_family_compresses_to_one_column(self):
        z = np.linspace(-1.0, 1.0, 100)
        g = 1.0 / (z + 1.5)
        f = np.outer(g, np.array([1.0, -2.0, 0.5]))
        r, rep = qr_aaa(z, f, QrAaaOptions(tol_aaa=1e-12, tol_qr=1e-12))
        assert rep.qr_rank == 1
        assert rep.fit.converged
        assert np.abs(r.eval_many(z) - f).max() <= 1e-11 * np.abs(f).max()

    def test_supports_index_original_samples(self):
        rng = np.random.default_rng(30)
        z, f = _low_rank_family(rng)
        r, rep = qr_aaa(z, f, QrAaaOptions(tol_aaa=1e-11, tol_qr=1e-11))
        for v, zv in enumerate(r.support_points):
            i = int(np.argmin(np.abs(z - zv)))
            assert z[i] == zv
            np.testing.assert_allclose(r.support_values[v], f[i],
                                       rtol=0, atol=0)

    def test_full_residual_measured_on_originals(self):
        rng = np.random.default_rng(31)
        z, f = _low_rank_family(rng)
        r, rep = qr_aaa(z, f, QrAaaOptions(tol_aaa=1e-10, tol_qr=1e-10))
        # absolute sup row norm, with support rows contributing zero
        off = ~np.isin(z, r.support_points)
        manual = np.abs(r.eval_many(z[off]) - f[off]).max()
        np.testing.assert_allclose(rep.full_residual, manual, rtol=1e-10)

    def test_matches_direct_engine_within_factor_ten(self):
        # oracle route: the uncompressed fit on all 512 columns
        rng = np.random.default_rng(32)
        z, f = _low_rank_family(rng, n_cols=512, rank=6)
        opts = QrAaaOptions(tol_aaa=1e-9, tol_qr=1e-9)
        rq, repq = qr_aaa(z, f, opts)
        rs, _ = sv_aaa(z, f, opts.fit_options())
        scale = np.abs(f).max()
        res_q = np.abs(rq.eval_many(z) - f).max() / scale
        res_s = np.abs(rs.eval_many(z) - f).max() / scale
        assert res_q <= max(10.0 * res_s, 1e-9)

    def test_twenty_seeded_families_within_factor_ten(self):
        for seed in range(20):
            rng = np.random.default_rng(3000 + seed)
            z, f = _low_rank_family(rng, n_points=120, n_cols=64,
                                    rank=4 + seed % 3)
            opts = QrAaaOptions(tol_aaa=1e-8, tol_qr=1e-8)
            rq, _ = qr_aaa(z, f, opts)
            rs, _ = sv_aaa(z, f, opts.fit_options())
            scale = np.abs(f).max()
            res_q = np.abs(rq.eval_many(z) - f).max() / scale
            res_s = np.abs(rs.eval_many(z) - f).max() / scale
            assert res_q <= max(10.0 * res_s, 1e-8), seed

    def test_hoelder_bound_holds_on_converged_runs(self):
        for seed in range(10):
            rng = np.random.default_rng(4000 + seed)
            z, f = _low_rank_family(rng, n_cols=40, rank=5)
            r, rep = qr_aaa(z, f, QrAaaOptions(tol_aaa=1e-9, tol_qr=1e-9))
            assert rep.fit.converged
            assert rep.bound_terms is not None
            rhs = sum(rep.bound_terms)
            assert rep.lhs_max_error <= rhs + 1e-12 * np.abs(f).max()

    def test_bound_terms_recomputable(self):
        rng = np.random.default_rng(33)
        z, f = _low_rank_family(rng)
        r, rep = qr_aaa(z, f, QrAaaOptions(tol_aaa=1e-10, tol_qr=1e-10))
        terms = hoelder_bound_terms(z, f, rep.basis, r)
        np.testing.assert_allclose(terms.lhs, rep.lhs_max_error, rtol=1e-12)

    def test_tol_qr_controls_rank(self):
        rng = np.random.default_rng(34)
        z = np.linspace(-1.0, 1.0, 120)
        # columns with geometrically decaying contributions
        basis = np.column_stack([1.0 / (z + 1.2 + 0.3 * k)
                                 for k in range(8)])
        f = basis * (10.0 ** -np.arange(8))[None, :]
        loose = qr_aaa(z, f, QrAaaOptions(tol_aaa=1e-4, tol_qr=1e-4))[1]
        tight = qr_aaa(z, f, QrAaaOptions(tol_aaa=1e-10, tol_qr=1e-10))[1]
        assert loose.qr_rank < tight.qr_rank


class TestPqrAaa:
    def _blocks(self, f, cuts):
        return [f[:, a:b] for a, b in zip((0,) + cuts, cuts + (f.shape[1],))]

    def test_worker_count_invariance_with_fixed_partitions(self):
        rng = np.random.default_rng(35)
        z, f = _low_rank_family(rng, n_cols=96, rank=5)
        blocks = self._blocks(f, (30, 61))
        results = []
        for workers in (1, 2, 4):
            r, rep = pqr_aaa(z, blocks, QrAaaOptions(tol_aaa=1e-9,
                                                     tol_qr=1e-9),
                             n_workers=workers)
            results.append((r, rep))
        r0, rep0 = results[0]
        for r, rep in results[1:]:
            np.testing.assert_array_equal(r.support_points,
                                          r0.support_points)
            np.testing.assert_array_equal(r.weights, r0.weights)
            np.testing.assert_array_equal(r.support_values,
                                          r0.support_values)
            assert rep.worker_ranks == rep0.worker_ranks

    def test_single_partition_matches_qr_aaa(self):
        rng = np.random.default_rng(36)
        z, f = _low_rank_family(rng, n_cols=50)
        opts = QrAaaOptions(tol_aaa=1e-9, tol_qr=1e-9)
        rp, repp = pqr_aaa(z, [f], opts)
        rq, repq = qr_aaa(z, f, opts)
        np.testing.assert_array_equal(rp.support_points, rq.support_points)
        np.testing.assert_allclose(rp.weights, rq.weights, atol=1e-13)

    def test_supports_index_full_matrix_rows(self):
        rng = np.random.default_rng(37)
        z, f = _low_rank_family(rng, n_cols=60)
        blocks = self._blocks(f, (20, 40))
        r, rep = pqr_aaa(z, blocks, QrAaaOptions(tol_aaa=1e-9, tol_qr=1e-9))
        assert r.support_values.shape[1] == 60
        for v, zv in enumerate(r.support_points):
            i = int(np.argmin(np.abs(z - zv)))
            np.testing.assert_array_equal(r.support_values[v], f[i])

    def test_validation_close_to_unsplit_fit(self):
        rng = np.random.default_rng(38)
        z, f = _low_rank_family(rng, n_cols=90, rank=6)
        opts = QrAaaOptions(tol_aaa=1e-8, tol_qr=1e-8)
        rp, _ = pqr_aaa(z, self._blocks(f, (30, 60)), opts)
        scale = np.abs(f).max()
        assert np.abs(rp.eval_many(z) - f).max() / scale <= 1e-6

    def test_worker_ranks_reported_per_block(self):
        rng = np.random.default_rng(39)
        z, f = _low_rank_family(rng, n_cols=60, rank=4)
        _, rep = pqr_aaa(z, self._blocks(f, (20, 40)),
                         QrAaaOptions(tol_aaa=1e-9, tol_qr=1e-9))
        assert len(rep.worker_ranks) == 3
        assert all(k >= 1 for k in rep.worker_ranks)

    def test_second_rank_reveal_flagged_for_redundant_blocks(self):
        rng = np.random.default_rng(40)
        z, f = _low_rank_family(rng, n_cols=20, rank=4)
        # six copies of the same block: concatenated bases are 6x
        # redundant, so the join stage must re-reveal
        blocks = [f] * 6
        r, rep = pqr_aaa(z, blocks,
                         QrAaaOptions(tol_aaa=1e-9, tol_qr=1e-9,
                                      rank_reveal_factor=1.5))
        assert rep.second_rank_reveal
        full = np.hstack(blocks)
        assert np.abs(r.eval_many(z) - full).max() <= 1e-6 * np.abs(f).max()

    def test_partition_grid_mismatch_raises(self):
        z = np.linspace(0.0, 1.0, 30)
        with pytest.raises(ValueError, match='partition'):
            pqr_aaa(z, [np.ones((30, 2)), np.ones((29, 2))])

    def test_empty_partition_list_raises(self):
        with pytest.raises(ValueError):
            pqr_aaa(np.linspace(0, 1, 10), [])


class TestOptions:
    def test_tolerance_validation(self):
        with pytest.raises(ValueError):
            QrAaaOptions(tol_aaa=0.0)
        with pytest.raises(ValueError):
            QrAaaOptions(tol_qr=2.0)

    def test_fit_options_carry_tolerances(self):
        opts = QrAaaOptions(tol_aaa=1e-7, tol_qr=1e-9, max_degree=17)
        fo = opts.fit_options()
        assert fo.tol == 1e-7
        assert fo.max_degree == 17

    def test_opts_and_kwargs_conflict(self):
        z = np.linspace(0, 1, 20)
        f = np.ones((20, 2))
        with pytest.raises(TypeError):
            qr_aaa(z, f, QrAaaOptions(), tol_aaa=1e-8)
