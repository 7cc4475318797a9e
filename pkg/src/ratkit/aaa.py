"""Greedy rational fitting: scalar AAA and its vector-valued variant.

Both engines iterate the same loop: pick the grid point where the
current approximant is worst, add it to the support set, and recompute
the barycentric weights as the right singular vector belonging to the
smallest singular value of the (block) Loewner matrix over the
remaining points.  Convergence is measured *relative* to the largest
sample row norm; the stopping test is

    res_m = sup_z ||f(z) - r_m(z)||_p  <=  tol * max_z ||f(z)||_p.

The vector engine optionally maintains its weight-solve factorization
across iterations instead of refactorizing the Loewner matrix from
scratch; the naive recompute stays available (and is the default) as a
cross-check.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .barycentric import NEAR_SUPPORT, VectorRational, cardinal_rows


def _norm_p(p):
    if p in (2, 2.0, '2'):
        return 2.0
    if p in (np.inf, float('inf'), 'inf'):
        return np.inf
    raise ValueError('norm_p must be 2 or inf, got %r' % (p,))


def _row_norms(a, p):
    if p == 2.0:
        return np.sqrt(np.sum(np.abs(a) ** 2, axis=1))
    return np.max(np.abs(a), axis=1)


@dataclass
class FitOptions:
    """Knobs for the greedy engines.

    tol is the relative residual target; max_degree bounds the number
    of support points m (the rational degree is m - 1); norm_p in
    {2, inf} selects the row norm used by the greedy pick and the
    residual; forced_supports are grid indices installed before the
    first greedy pick (they count toward max_degree and are never
    removed); use_incremental_update switches the weight solve to the
    maintained factorization.
    """
    tol: float = 1e-13
    max_degree: int = 100
    norm_p: float = np.inf
    forced_supports: tuple = ()
    use_incremental_update: bool = False

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise ValueError('tol must lie in (0, 1)')
        if self.max_degree < 1:
            raise ValueError('max_degree must be >= 1')
        self.norm_p = _norm_p(self.norm_p)


@dataclass
class FitReport:
    """What happened during a fit; serializes to a plain dict for the CLI."""
    iterations: int = 0
    converged: bool = False
    final_residual: float = np.nan
    residual_history: list = field(default_factory=list)
    support_indices: object = field(default_factory=list)
    loewner_degenerate: bool = False
    norm_scale: float = np.nan

    def to_dict(self):
        return {
            'iterations': self.iterations,
            'converged': self.converged,
            'final_residual': float(self.final_residual),
            'residual_history': [float(v) for v in self.residual_history],
            'support_indices': (dict(self.support_indices)
                                if isinstance(self.support_indices, dict)
                                else [int(i) for i in self.support_indices]),
            'loewner_degenerate': self.loewner_degenerate,
            'norm_scale': float(self.norm_scale),
        }


def _canonical_phase(w):
    """Rotate a weight vector so its largest entry is real positive.

    Any global phase gives the same rational; pinning one makes the
    incremental and naive solves (and partition orderings) comparable.
    """
    i = int(np.argmax(np.abs(w)))
    piv = w[i]
    if piv == 0.0:
        return w
    return w * (np.conj(piv) / abs(piv))


def _naive_weights(z, f, sup, mask):
    t = np.nonzero(mask)[0]
    m = len(sup)
    ct = 1.0 / (z[t, None] - z[sup][None, :])
    loewner = (f[t][:, :, None] - f[sup].T[None, :, :]) * ct[:, None, :]
    return kernels.min_right_singular_vector(loewner.reshape(-1, m))


class _UnstableDowndate(Exception):
    pass


class _IncrementalSolver:
    """Thin QR of the block Loewner matrix, maintained across iterations.

    Rows are indexed flat over (grid point, component); rows belonging
    to removed support points stay in the arrays but are zeroed, so
    only the column count of the factors grows.  Per iteration the n
    rows of the freshly picked support leave (plane rotations against
    the explicit orthogonal complement direction of each row) and one
    new column arrives (classical Gram-Schmidt, applied twice).  The
    weight vector is then the smallest right singular vector of the
    small triangular factor.  A leverage check guards the row
    deletions; when it trips, the factorization is rebuilt from the
    current Loewner matrix.
    """

    def __init__(self, z, f):
        self.z = z
        self.f = f
        self.n = f.shape[1]
        self.big_m = len(z) * self.n
        dtype = np.result_type(z.dtype, f.dtype, float)
        self.q = np.zeros((self.big_m, 0), dtype=dtype)
        self.r = np.zeros((0, 0), dtype=dtype)
        self.sup = []
        self.mask = np.ones(len(z), dtype=bool)

    def _flat_rows(self, t):
        return (t[:, None] * self.n + np.arange(self.n)[None, :]).ravel()

    def _column(self, idx):
        z, f = self.z, self.f
        t = np.nonzero(self.mask)[0]
        c = np.zeros(self.big_m, dtype=self.q.dtype)
        block = (f[t] - f[idx][None, :]) / (z[t] - z[idx])[:, None]
        c[self._flat_rows(t)] = block.ravel()
        return c

    def _rebuild(self):
        z, f = self.z, self.f
        t = np.nonzero(self.mask)[0]
        sup = self.sup
        ct = 1.0 / (z[t][:, None] - z[sup][None, :])
        lo = ((f[t][:, :, None] - f[sup].T[None, :, :])
              * ct[:, None, :]).reshape(-1, len(sup))
        q, r = np.linalg.qr(lo)
        self.q = np.zeros((self.big_m, len(sup)), dtype=self.q.dtype)
        self.q[self._flat_rows(t)] = q
        self.r = r

    def _delete_row(self, i):
        # coordinates of e_i in the column space, with the residual
        # direction computed explicitly so no cancellation enters beta
        q = self.q
        coord = q[i, :].conj()
        e = np.zeros(self.big_m, dtype=q.dtype)
        e[i] = 1.0
        resid = e - q @ coord
        corr = q.conj().T @ resid
        resid -= q @ corr
        coord = coord + corr
        beta = np.linalg.norm(resid)
        if beta < 1e-8:
            raise _UnstableDowndate
        y = np.concatenate([coord, [beta]])
        qu = np.column_stack([q, resid / beta])
        rst = np.vstack([self.r,
                         np.zeros((1, self.r.shape[1]), dtype=self.r.dtype)])
        # rotate y onto e_1; same rotations hit rst from the left and
        # qu from the right (conjugated), turning column 0 of qu into
        # (a multiple of) e_i, which is then dropped
        for k in range(len(y) - 2, -1, -1):
            a, b = y[k], y[k + 1]
            if b == 0.0:
                continue
            d = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
            y[k], y[k + 1] = d, 0.0
            rk = rst[k, :].copy()
            rk1 = rst[k + 1, :]
            rst[k, :] = (np.conj(a) * rk + np.conj(b) * rk1) / d
            rst[k + 1, :] = (-b * rk + a * rk1) / d
            qk = qu[:, k].copy()
            qk1 = qu[:, k + 1]
            qu[:, k] = (qk * a + qk1 * b) / d
            qu[:, k + 1] = (-qk * np.conj(b) + qk1 * np.conj(a)) / d
        self.q = np.ascontiguousarray(qu[:, 1:])
        self.q[i, :] = 0.0
        self.r = rst[1:, :]

    def _append_column(self, c):
        m = self.q.shape[1]
        if m == 0:
            rho = np.linalg.norm(c)
            self.q = (c / rho if rho > 0.0 else c)[:, None]
            self.r = np.array([[rho]], dtype=self.q.dtype)
            return
        u = self.q.conj().T @ c
        d = c - self.q @ u
        u2 = self.q.conj().T @ d
        d -= self.q @ u2
        u += u2
        rho = np.linalg.norm(d)
        qcol = d / rho if rho > 0.0 else d
        self.q = np.column_stack([self.q, qcol])
        rnew = np.zeros((m + 1, m + 1), dtype=self.r.dtype)
        rnew[:m, :m] = self.r
        rnew[:m, m] = u
        rnew[m, m] = rho
        self.r = rnew

    def add_support(self, idx):
        rebuild = False
        if self.sup:
            try:
                for i in range(idx * self.n, (idx + 1) * self.n):
                    self._delete_row(i)
            except _UnstableDowndate:
                rebuild = True
        self.mask[idx] = False
        self.sup.append(idx)
        if rebuild:
            self._rebuild()
            return
        self._append_column(self._column(idx))

    def weights(self):
        return kernels.min_right_singular_vector(self.r)


def _validate_samples(points, values):
    z = np.asarray(points)
    f = np.asarray(values)
    if z.ndim != 1:
        raise ValueError('grid must be one-dimensional')
    if f.ndim == 1:
        f = f[:, None]
    if f.shape[0] != z.shape[0]:
        raise ValueError('sample matrix rows must match the grid length')
    if len(np.unique(z)) != len(z):
        raise ValueError('grid points must be pairwise distinct')
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(f))):
        raise ValueError('samples must be finite')
    if not np.iscomplexobj(z):
        z = z.astype(float)
    if not np.iscomplexobj(f):
        f = f.astype(float)
    return z, f


def sv_aaa(points, values, opts=None, **kwargs):
    """Vector-valued AAA with shared supports, weights and poles.

    Args:
        points: the N sample points (real or complex, distinct).
        values: (N, n) sample matrix, component j in column j.
        opts: a FitOptions; alternatively pass its fields as keywords.

    Returns:
        (VectorRational, FitReport).  On non-convergence the best
        approximant found so far is returned with converged=False.
    """
    if opts is None:
        opts = FitOptions(**kwargs)
    elif kwargs:
        raise TypeError('pass either opts or keyword options, not both')
    z, f = _validate_samples(points, values)
    big_n, n = f.shape
    if big_n < 2:
        raise ValueError('need at least two sample points')

    scale = float(_row_norms(f, opts.norm_p).max())
    rel = opts.tol * scale
    report = FitReport(norm_scale=scale)

    forced = [int(i) for i in opts.forced_supports]
    if len(set(forced)) != len(forced):
        raise ValueError('forced_supports must be pairwise distinct')
    if forced and not all(0 <= i < big_n for i in forced):
        raise ValueError('forced support index out of range')

    mask = np.ones(big_n, dtype=bool)
    sup = []
    inc = _IncrementalSolver(z, f) if opts.use_incremental_update else None
    r = None

    def solve_weights():
        if inc is not None:
            return _canonical_phase(inc.weights())
        return _canonical_phase(_naive_weights(z, f, sup, mask))

    def install(idx):
        sup.append(idx)
        mask[idx] = False
        if inc is not None:
            inc.add_support(idx)

    def degenerate_next(m_next):
        return n * (big_n - m_next) < m_next

    # residual rows of the current approximant over the non-support grid
    def current_errs():
        t = np.nonzero(mask)[0]
        if not len(t):
            return t, np.array([])
        if r is None:
            approx = np.broadcast_to(f.mean(axis=0), (len(t), n))
        else:
            h, _ = cardinal_rows(z[t], r.support_points, r.weights)
            approx = h @ r.support_values
        return t, _row_norms(f[t] - approx, opts.norm_p)

    if forced:
        if degenerate_next(len(forced)):
            report.loewner_degenerate = True
        else:
            for idx in forced:
                install(idx)
            w = solve_weights()
            r = VectorRational(z[sup], w, f[sup])
            report.iterations += 1

    while not report.loewner_degenerate:
        t, errs = current_errs()
        if r is not None:
            res = float(errs.max()) if len(errs) else 0.0
            report.residual_history.append(res)
            if res <= rel:
                report.converged = True
                break
            if len(sup) >= opts.max_degree:
                break
        if not len(t):
            break
        if degenerate_next(len(sup) + 1):
            report.loewner_degenerate = True
            break
        install(int(t[np.argmax(errs)]))
        w = solve_weights()
        r = VectorRational(z[sup], w, f[sup])
        report.iterations += 1

    if r is None:    # degenerate before any support could be placed
        install(0 if not sup else sup[0])
        r = VectorRational(z[sup[:1]], np.ones(1), f[sup[:1]])
        report.iterations = max(report.iterations, 1)

    if report.residual_history:
        report.final_residual = report.residual_history[-1]
    else:
        report.final_residual = residual(r, z, f, opts.norm_p)
        report.residual_history.append(report.final_residual)
    report.support_indices = list(sup)
    return r, report


def aaa(points, values, opts=None, **kwargs):
    """Scalar AAA (one component); same conventions as :func:`sv_aaa`.

    Kept as its own small loop rather than a delegation so the two can
    cross-check each other.
    """
    if opts is None:
        opts = FitOptions(**kwargs)
    elif kwargs:
        raise TypeError('pass either opts or keyword options, not both')
    z, f = _validate_samples(points, values)
    if f.shape[1] != 1:
        raise ValueError('aaa expects a single component; use sv_aaa')
    fv = f[:, 0]
    big_n = len(z)
    if big_n < 2:
        raise ValueError('need at least two sample points')

    scale = float(np.abs(fv).max())
    rel = opts.tol * scale
    report = FitReport(norm_scale=scale)
    mask = np.ones(big_n, dtype=bool)
    sup = list(int(i) for i in opts.forced_supports)
    for idx in sup:
        mask[idx] = False
    r = None

    def weights_now():
        t = np.nonzero(mask)[0]
        ct = 1.0 / (z[t, None] - z[sup][None, :])
        loewner = (fv[t, None] - fv[sup][None, :]) * ct
        return _canonical_phase(kernels.min_right_singular_vector(loewner))

    if sup:
        r = VectorRational(z[sup], weights_now(), fv[sup])
        report.iterations += 1

    while True:
        t = np.nonzero(mask)[0]
        if r is None:
            errs = np.abs(fv[t] - fv.mean())
        else:
            h, _ = cardinal_rows(z[t], r.support_points, r.weights)
            errs = np.abs(fv[t] - (h @ r.support_values)[:, 0])
        if r is not None:
            res = float(errs.max()) if len(t) else 0.0
            report.residual_history.append(res)
            if res <= rel:
                report.converged = True
                break
            if len(sup) >= opts.max_degree:
                break
        if not len(t) or big_n - (len(sup) + 1) < len(sup) + 1:
            report.loewner_degenerate = bool(len(t))
            break
        sup.append(int(t[np.argmax(errs)]))
        mask[sup[-1]] = False
        r = VectorRational(z[sup], weights_now(), fv[sup])
        report.iterations += 1

    if r is None:
        sup = [0]
        r = VectorRational(z[:1], np.ones(1), fv[:1])
        report.iterations = 1
    if report.residual_history:
        report.final_residual = report.residual_history[-1]
    else:
        report.final_residual = residual(r, z, f, opts.norm_p)
        report.residual_history.append(report.final_residual)
    report.support_indices = list(sup)
    return r, report


def residual(r, points, values, norm_p=np.inf):
    """sup_z ||f(z) - r(z)||_p over the grid, support rows contributing 0."""
    p = _norm_p(norm_p)
    z = np.asarray(points)
    f = np.asarray(values)
    if f.ndim == 1:
        f = f[:, None]
    diff = np.abs(z[:, None] - r.support_points[None, :])
    on_support = (diff <= NEAR_SUPPORT * np.abs(r.support_points)[None, :]).any(axis=1)
    t = np.nonzero(~on_support)[0]
    if not len(t):
        return 0.0
    errs = _row_norms(f[t] - r.eval_many(z[t]), p)
    return float(errs.max())
