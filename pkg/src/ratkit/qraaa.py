"""Rank-revealing compression in front of the vector fitting loop.

For a sample matrix F with strong column correlations, fitting all n
columns directly wastes work: the greedy engine's weight solve scales
with n.  Here F is first compressed by a column-pivoted QR truncated at
its numerical rank k, the fit runs on the k scaled basis columns
Q(:, 1:k) * |diag(C)(1:k)|, and the resulting supports and weights are
re-attached to the original samples.  The absolute-value scaling keeps
the basis columns ordered by importance without letting the trailing
ones be overfit.

The split/join variant distributes column blocks over a thread pool,
compresses each block independently, and joins by concatenating the
per-block scaled bases for one final fit.  Outputs depend only on the
partition boundaries, never on the worker count.

A measured a-posteriori bound accompanies every fit: with H_m the
barycentric row map of the returned rational and Delta2 = F P - Q1 C1
the QR truncation error,

    ||F - H_m F(Z_m, :)||_max  <=  ||Delta2||_max
                                   + eps1 * k^(1 - 1/p)
                                   + ||H_m Delta2(Z_m, :)||_max,

where eps1 is the achieved row p-norm residual on the scaled basis.
The inequality holds in exact arithmetic because column pivoting keeps
the entries of inv(D) C1 at modulus <= 1; checks allow roundoff slack.
"""

from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .aaa import (FitOptions, FitReport, _norm_p, _row_norms,
                  _validate_samples, residual, sv_aaa)
from .barycentric import NEAR_SUPPORT, VectorRational, cardinal_rows

BoundTerms = namedtuple('BoundTerms',
                        'lhs qr_truncation_norm aaa_term h_delta_term')


@dataclass
class QrAaaOptions:
    """Tolerances for the two stages.

    tol_qr cuts the pivoted QR at the numerical rank; tol_aaa is the
    relative residual target of the fit on the compressed basis.
    rank_reveal_factor controls the join stage of the split/join
    variant: a second rank reveal is applied to the concatenated worker
    bases when their total column count exceeds this factor times the
    largest single worker rank.
    """
    tol_aaa: float = 1e-13
    tol_qr: float = 1e-13
    max_degree: int = 100
    norm_p: float = np.inf
    rank_reveal_factor: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.tol_aaa < 1.0:
            raise ValueError('tol_aaa must lie in (0, 1)')
        if not 0.0 < self.tol_qr < 1.0:
            raise ValueError('tol_qr must lie in (0, 1)')
        if self.max_degree < 1:
            raise ValueError('max_degree must be >= 1')
        self.norm_p = _norm_p(self.norm_p)

    def fit_options(self):
        return FitOptions(tol=self.tol_aaa, max_degree=self.max_degree,
                          norm_p=self.norm_p)


@dataclass
class QrBasis:
    """Retained QR intermediates, one (q, c, perm) triple per column
    block, in block order.  ``rank`` is the total scaled-basis column
    count before any join-stage second reveal."""
    blocks: list
    rank: int

    def scaled_basis(self):
        cols = []
        for q, c, _ in self.blocks:
            k = q.shape[1]
            cols.append(q * np.abs(np.diagonal(c)[:k])[None, :])
        if not cols:
            return np.zeros((0, 0))
        return cols[0] if len(cols) == 1 else np.hstack(cols)


@dataclass
class QrAaaReport:
    qr_rank: int
    fit: FitReport
    bound_terms: tuple
    lhs_max_error: float = np.nan
    full_residual: float = np.nan
    worker_ranks: list = field(default_factory=list)
    second_rank_reveal: bool = False
    basis: QrBasis = field(default=None, repr=False)

    def to_dict(self):
        return {
            'qr_rank': int(self.qr_rank),
            'fit': self.fit.to_dict(),
            'bound_terms': (None if self.bound_terms is None
                            else [float(t) for t in self.bound_terms]),
            'lhs_max_error': float(self.lhs_max_error),
            'full_residual': float(self.full_residual),
            'worker_ranks': [int(k) for k in self.worker_ranks],
            'second_rank_reveal': self.second_rank_reveal,
        }


def _resolve_opts(opts, kwargs):
    if opts is None:
        return QrAaaOptions(**kwargs)
    if kwargs:
        raise TypeError('pass either opts or keyword options, not both')
    return opts


def _support_grid_indices(z, r):
    diff = np.abs(z[:, None] - r.support_points[None, :])
    tol = NEAR_SUPPORT * np.abs(r.support_points)[None, :]
    idx = np.full(len(r.support_points), -1, dtype=int)
    rows, cols = np.nonzero(diff <= tol)
    idx[cols] = rows
    if np.any(idx < 0):
        raise ValueError('approximant support points are not on the grid')
    return idx


def _absmax(a):
    return float(np.abs(a).max()) if a.size else 0.0


def hoelder_bound_terms(points, values, q_basis, r, norm_p=np.inf):
    """Measure both sides of the a-posteriori error bound.

    ``values`` is the original sample matrix, or the list of column
    blocks matching ``q_basis.blocks``.  Returns BoundTerms with the
    measured left-hand side and the three right-hand terms; callers
    assert lhs <= sum of terms plus roundoff slack.
    """
    p = _norm_p(norm_p)
    z = np.asarray(points)
    parts = list(values) if isinstance(values, (list, tuple)) else [values]
    parts = [np.asarray(f)[:, None] if np.asarray(f).ndim == 1 else np.asarray(f)
             for f in parts]
    if len(parts) != len(q_basis.blocks):
        raise ValueError('sample blocks do not match the QR blocks')
    h, _ = cardinal_rows(z, r.support_points, r.weights)
    sup = _support_grid_indices(z, r)

    lhs = 0.0
    d2max = 0.0
    hdmax = 0.0
    for (q, c, perm), f in zip(q_basis.blocks, parts):
        delta2 = f[:, perm] - q @ c
        d2max = max(d2max, _absmax(delta2))
        hdmax = max(hdmax, _absmax(h @ delta2[sup]))
        lhs = max(lhs, _absmax(f - h @ f[sup]))
    b = q_basis.scaled_basis()
    if b.shape[1]:
        eps1 = float(_row_norms(b - h @ b[sup], p).max())
    else:
        eps1 = 0.0
    expo = 1.0 if p == np.inf else 0.5
    aaa_term = eps1 * q_basis.rank ** expo if q_basis.rank else 0.0
    return BoundTerms(lhs, d2max, aaa_term, hdmax)


def qr_aaa(points, values, opts=None, **kwargs):
    """Compress the columns of ``values``, fit the compressed basis,
    re-attach the original samples.

    Returns (VectorRational, QrAaaReport); the report carries the rank,
    the basis-fit history and the measured bound terms.
    """
    opts = _resolve_opts(opts, kwargs)
    z, f = _validate_samples(points, values)
    qr = kernels.pivoted_qr(f, rel_tol=opts.tol_qr)
    basis = QrBasis(blocks=[(qr.q, qr.r, qr.perm)], rank=qr.rank)

    if qr.rank == 0:
        r = VectorRational(z[:1], np.ones(1),
                           np.zeros((1, f.shape[1]), dtype=f.dtype))
        fit = FitReport(iterations=0, converged=True, final_residual=0.0,
                        support_indices=[0], norm_scale=0.0)
    else:
        rb, fit = sv_aaa(z, basis.scaled_basis(), opts.fit_options())
        sup = fit.support_indices
        r = VectorRational(z[sup], rb.weights, f[sup])

    terms = hoelder_bound_terms(z, [f], basis, r, opts.norm_p)
    report = QrAaaReport(qr_rank=qr.rank, fit=fit, bound_terms=terms[1:],
                         lhs_max_error=terms.lhs,
                         full_residual=residual(r, z, f, opts.norm_p),
                         worker_ranks=[qr.rank], basis=basis)
    return r, report


def pqr_aaa(points, partitions, opts=None, n_workers=1, **kwargs):
    """Split/join fitting of column blocks sharing one grid.

    Each block in ``partitions`` is compressed and fitted on its own
    worker; the join concatenates the per-block scaled bases (in block
    order) and runs one final fit whose supports index the full matrix.
    The result is identical for any ``n_workers``.
    """
    opts = _resolve_opts(opts, kwargs)
    z = np.asarray(points)
    if z.ndim != 1:
        raise ValueError('grid must be one-dimensional')
    if not partitions:
        raise ValueError('need at least one partition')
    parts = []
    for i, block in enumerate(partitions):
        bf = np.asarray(block)
        if bf.ndim == 1:
            bf = bf[:, None]
        if bf.shape[0] != len(z):
            raise ValueError('partition %d does not share the sample grid' % i)
        parts.append(bf)

    with ThreadPoolExecutor(max_workers=max(1, int(n_workers))) as pool:
        futures = [pool.submit(qr_aaa, z, bf, opts) for bf in parts]
        results = []
        for i, fut in enumerate(futures):
            try:
                results.append(fut.result())
            except Exception as exc:
                raise RuntimeError('partition %d worker failed: %s'
                                   % (i, exc)) from exc

    blocks = [rep.basis.blocks[0] for _, rep in results]
    worker_ranks = [rep.qr_rank for _, rep in results]
    basis = QrBasis(blocks=blocks, rank=int(sum(worker_ranks)))
    b = basis.scaled_basis()

    second = (basis.rank > 0
              and basis.rank > opts.rank_reveal_factor * max(worker_ranks))
    if second:
        qr2 = kernels.pivoted_qr(b, rel_tol=opts.tol_qr)
        join_basis = qr2.q * np.abs(np.diagonal(qr2.r)[:qr2.rank])[None, :]
    else:
        join_basis = b

    if join_basis.shape[1] == 0:
        r = VectorRational(z[:1], np.ones(1),
                           np.hstack([bf[:1] for bf in parts]) * 0.0)
        fit = FitReport(iterations=0, converged=True, final_residual=0.0,
                        support_indices=[0], norm_scale=0.0)
    else:
        rb, fit = sv_aaa(z, join_basis, opts.fit_options())
        sup = fit.support_indices
        vals = np.hstack([bf[sup] for bf in parts])
        r = VectorRational(z[sup], rb.weights, vals)

    terms = hoelder_bound_terms(z, parts, basis, r, opts.norm_p)
    full = np.hstack(parts) if len(parts) > 1 else parts[0]
    report = QrAaaReport(qr_rank=join_basis.shape[1], fit=fit,
                         bound_terms=terms[1:], lhs_max_error=terms.lhs,
                         full_residual=residual(r, z, full, opts.norm_p),
                         worker_ranks=worker_ranks,
                         second_rank_reveal=second, basis=basis)
    return r, report
