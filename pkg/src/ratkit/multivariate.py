"""Separable multivariate rational approximation on tensor grids.

Each mode unfolding is compressed by a pivoted QR and fitted by the
shared-pole greedy engine; the per-mode supports and weights then join
into an interpolative Tucker representation whose factors are
barycentric row maps.  For functions where one direction has no good
shared-pole approximant, a bivariate greedy engine carrying a full
weight tensor is provided, and can be warm-started from the per-mode
supports (the two-step procedure).
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .aaa import FitOptions, FitReport, _canonical_phase
from .aaa import sv_aaa
from .barycentric import NEAR_SUPPORT, cardinal_rows
from .qraaa import QrAaaOptions, QrAaaReport, qr_aaa

__all__ = [
    'SampleTensor', 'TuckerRational', 'BivariateRational',
    'tucker_qr_aaa', 'eval_tucker', 'p_aaa_2d', 'two_step',
]


@dataclass
class SampleTensor:
    """Dense samples of a d-variate function on a tensor grid."""

    mode_grids: tuple
    values: np.ndarray

    def __post_init__(self):
        self.mode_grids = tuple(np.atleast_1d(np.asarray(g)).ravel()
                                for g in self.mode_grids)
        self.values = np.asarray(self.values)
        d = len(self.mode_grids)
        if not 2 <= d <= 6:
            raise ValueError('need between 2 and 6 modes, got %d' % d)
        for g in self.mode_grids:
            if not np.all(np.isfinite(g)):
                raise ValueError('grid points must be finite')
        if self.values.ndim != d:
            raise ValueError('values must be a %d-way array' % d)
        shape = tuple(len(g) for g in self.mode_grids)
        if self.values.shape != shape:
            raise ValueError('values shape %r does not match grids %r'
                             % (self.values.shape, shape))
        if not np.all(np.isfinite(self.values)):
            raise ValueError('tensor entries must be finite')

    @property
    def ndim(self):
        return len(self.mode_grids)

    @property
    def shape(self):
        return self.values.shape

    def unfold(self, mode):
        """Mode unfolding with the mode's fibers as rows (N_mode x rest)."""
        d = self.ndim
        if not 0 <= mode < d:
            raise ValueError('mode %d out of range for a %d-way tensor'
                             % (mode, d))
        return np.moveaxis(self.values, mode, 0).reshape(self.shape[mode], -1)

    @classmethod
    def from_function(cls, fn, mode_grids):
        """Sample ``fn`` on the tensor grid (fn takes d broadcast arrays)."""
        grids = [np.atleast_1d(np.asarray(g)).ravel() for g in mode_grids]
        mesh = np.meshgrid(*grids, indexing='ij')
        return cls(tuple(grids), fn(*mesh))


def _distinct(points, label):
    if len(np.unique(points)) != len(points):
        raise ValueError('%s support points must be pairwise distinct'
                         % label)


def _unit(w, label):
    nrm = np.linalg.norm(w)
    if nrm == 0.0 or not np.isfinite(nrm):
        raise ValueError('%s weights must be nonzero and finite' % label)
    return w / nrm


def _encode(arr):
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        return {'re': arr.real.ravel().tolist(),
                'im': arr.imag.ravel().tolist(),
                'shape': list(arr.shape)}
    return {'re': arr.ravel().tolist(), 'shape': list(arr.shape)}


def _decode(doc):
    re = np.asarray(doc['re'], dtype=float)
    arr = re + 1j * np.asarray(doc['im'], dtype=float) if 'im' in doc else re
    return arr.reshape(doc['shape'])


@dataclass
class TuckerRational:
    """Interpolative Tucker form: core tensor with barycentric factors.

    Evaluation contracts the core values f(support cross-product)
    against one barycentric cardinal vector per mode; on the sample
    grid this is exactly the sequence of mode products with the
    per-mode barycentric matrices.
    """

    support_points: tuple
    weights: tuple
    core: np.ndarray

    def __post_init__(self):
        self.support_points = tuple(np.atleast_1d(np.asarray(s))
                                    for s in self.support_points)
        self.weights = tuple(np.atleast_1d(np.asarray(w))
                             for w in self.weights)
        self.core = np.asarray(self.core)
        d = len(self.support_points)
        if len(self.weights) != d:
            raise ValueError('need one weight vector per mode')
        shape = tuple(len(s) for s in self.support_points)
        if self.core.shape != shape:
            raise ValueError('core shape %r does not match support counts %r'
                             % (self.core.shape, shape))
        ws = []
        for ell in range(d):
            label = 'mode %d' % ell
            _distinct(self.support_points[ell], label)
            if len(self.weights[ell]) != shape[ell]:
                raise ValueError('%s weight count mismatch' % label)
            ws.append(_unit(self.weights[ell], label))
        self.weights = tuple(ws)

    @property
    def ndim(self):
        return len(self.support_points)

    @property
    def order(self):
        return tuple(len(s) for s in self.support_points)

    @property
    def degrees(self):
        return tuple(m - 1 for m in self.order)

    def eval_grid(self, grids, return_pole_mask=False):
        """Evaluate on a tensor grid; returns an array shaped by the grids.

        Points falling on a non-support zero of some mode's denominator
        make the whole affected slice an infinity marker.
        """
        grids = [np.atleast_1d(np.asarray(g)) for g in grids]
        if len(grids) != self.ndim:
            raise ValueError('need one grid per mode')
        res = self.core
        masks = []
        for ell, grid in enumerate(grids):
            h, pole = cardinal_rows(grid, self.support_points[ell],
                                    self.weights[ell])
            if np.any(pole):
                h = h.copy()
                h[pole] = 0.0
            masks.append(pole)
            res = np.moveaxis(np.tensordot(h, res, axes=(1, ell)), 0, ell)
        pole_mask = np.zeros(res.shape, dtype=bool)
        for ell, pole in enumerate(masks):
            if np.any(pole):
                sl = [slice(None)] * self.ndim
                sl[ell] = pole
                pole_mask[tuple(sl)] = True
        if np.any(pole_mask):
            res = res.astype(complex if np.iscomplexobj(res) else float)
            res[pole_mask] = np.inf
        if return_pole_mask:
            return res, pole_mask
        return res

    def __call__(self, *point):
        if len(point) == 1 and np.ndim(point[0]) == 1:
            point = tuple(np.asarray(point[0]))
        if len(point) != self.ndim:
            raise ValueError('expected a %d-coordinate point' % self.ndim)
        res = self.eval_grid([np.atleast_1d(np.asarray(x)) for x in point])
        return res.ravel()[0] if res.size == 1 else res

    def mode_row_norms(self, grids):
        """Max row 1-norm of each mode's barycentric matrix (diagnostic)."""
        out = []
        for ell, grid in enumerate(grids):
            h, _ = cardinal_rows(np.asarray(grid), self.support_points[ell],
                                 self.weights[ell])
            out.append(float(np.abs(h).sum(axis=1).max()))
        return tuple(out)

    def to_dict(self):
        return {
            'kind': 'tucker_rational',
            'support_points': [_encode(s) for s in self.support_points],
            'weights': [_encode(w) for w in self.weights],
            'core': _encode(self.core),
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get('kind') != 'tucker_rational':
            raise ValueError('not a tucker_rational document')
        return cls(tuple(_decode(s) for s in doc['support_points']),
                   tuple(_decode(w) for w in doc['weights']),
                   _decode(doc['core']))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), sort_keys=True)
        if path is not None:
            with open(path, 'w') as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, source):
        try:
            doc = json.loads(source)
        except (ValueError, TypeError):
            with open(source) as fh:
                doc = json.load(fh)
        return cls.from_dict(doc)


def eval_tucker(t, point):
    """Evaluate a TuckerRational at a single d-coordinate point."""
    return t(*tuple(np.atleast_1d(point)))


def _mode_options(opts, d, kwargs):
    if opts is None:
        base = QrAaaOptions(**kwargs)
        return [base] * d
    if kwargs:
        raise TypeError('pass either opts or keyword options, not both')
    if isinstance(opts, QrAaaOptions):
        return [opts] * d
    opts = list(opts)
    if len(opts) != d:
        raise ValueError('need one options object per mode')
    return opts


def _fiber_indices(tensor, opts_per_mode):
    idx = []
    for ell in range(tensor.ndim):
        _, _, perm, rank = kernels.pivoted_qr(
            tensor.unfold(ell).T, rel_tol=opts_per_mode[ell].tol_qr)
        idx.append(np.sort(perm[:rank]))
    return idx


def _mode_failure(ell, rep):
    if rep.fit.loewner_degenerate:
        return 'mode %d fit failed: degenerate weight system' % ell
    if not rep.fit.converged:
        return ('mode %d fit failed: tolerance not reached at degree cap %d'
                % (ell, len(rep.fit.support_indices) - 1))
    return None


def tucker_qr_aaa(tensor, opts=None, fiber_mode=False, n_workers=1,
                  allow_unconverged=False, **kwargs):
    """Per-mode compressed greedy fits joined into a Tucker approximant.

    Args:
        tensor: SampleTensor (2 to 6 modes).
        opts: QrAaaOptions applied to every mode, or one per mode.
        fiber_mode: fit the cross fibers selected by the per-mode QR
            pivots instead of the orthogonal basis columns.
        n_workers: thread count for the independent per-mode fits.
        allow_unconverged: keep capped / unconverged modes instead of
            raising (used by the warm-start procedure).

    Returns:
        (TuckerRational, list of per-mode reports).
    """
    d = tensor.ndim
    per_mode = _mode_options(opts, d, kwargs)

    cross = _fiber_indices(tensor, per_mode) if fiber_mode else None

    def fit_mode(ell):
        unf = tensor.unfold(ell)
        if not fiber_mode:
            return qr_aaa(tensor.mode_grids[ell], unf, per_mode[ell])
        take = [cross[k] if k != ell else np.arange(tensor.shape[k])
                for k in range(d)]
        sub = tensor.values[np.ix_(*take)]
        fibers = np.moveaxis(sub, ell, 0).reshape(tensor.shape[ell], -1)
        r, fit = sv_aaa(tensor.mode_grids[ell], fibers,
                        per_mode[ell].fit_options())
        h, _ = cardinal_rows(tensor.mode_grids[ell], r.support_points,
                             r.weights)
        full = float(np.max(np.abs(unf - h @ unf[fit.support_indices])))
        rep = QrAaaReport(qr_rank=len(cross[ell]), fit=fit, bound_terms=None,
                          lhs_max_error=full, full_residual=full)
        return r, rep

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(fit_mode, range(d)))
    else:
        results = [fit_mode(ell) for ell in range(d)]

    reports = [rep for _, rep in results]
    if not allow_unconverged:
        for ell, rep in enumerate(reports):
            msg = _mode_failure(ell, rep)
            if msg:
                raise RuntimeError(msg)

    sup_idx = [np.asarray(rep.fit.support_indices, dtype=int)
               for rep in reports]
    core = tensor.values[np.ix_(*sup_idx)]
    approx = TuckerRational(
        tuple(r.support_points for r, _ in results),
        tuple(r.weights for r, _ in results), core)
    return approx, reports


def _cauchy_rows(points, centers):
    """Raw Cauchy rows 1/(z - c) with unit rows at near-support hits."""
    points = np.atleast_1d(np.asarray(points))
    diff = points[:, None] - centers[None, :]
    hit = np.abs(diff) <= NEAR_SUPPORT * np.abs(centers)[None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        c = 1.0 / diff
    rows = hit.any(axis=1)
    if np.any(rows):
        r = np.nonzero(rows)[0]
        c[r] = 0.0
        c[r, np.argmax(hit[r], axis=1)] = 1.0
    return c, rows


@dataclass
class BivariateRational:
    """Barycentric rational in two variables with a full weight tensor."""

    supports_x: np.ndarray
    supports_y: np.ndarray
    weight_tensor: np.ndarray
    support_values: np.ndarray

    def __post_init__(self):
        self.supports_x = np.atleast_1d(np.asarray(self.supports_x))
        self.supports_y = np.atleast_1d(np.asarray(self.supports_y))
        self.weight_tensor = np.asarray(self.weight_tensor)
        self.support_values = np.asarray(self.support_values)
        _distinct(self.supports_x, 'x')
        _distinct(self.supports_y, 'y')
        shape = (len(self.supports_x), len(self.supports_y))
        if self.weight_tensor.shape != shape:
            raise ValueError('weight tensor shape %r, expected %r'
                             % (self.weight_tensor.shape, shape))
        if self.support_values.shape != shape:
            raise ValueError('support values shape %r, expected %r'
                             % (self.support_values.shape, shape))
        nrm = np.linalg.norm(self.weight_tensor)
        if nrm == 0.0 or not np.isfinite(nrm):
            raise ValueError('weight tensor must be nonzero and finite')
        self.weight_tensor = self.weight_tensor / nrm

    @property
    def order(self):
        return (len(self.supports_x), len(self.supports_y))

    @property
    def degree(self):
        return (len(self.supports_x) - 1, len(self.supports_y) - 1)

    def eval_grid(self, zx, zy, return_pole_mask=False):
        """Evaluate on the tensor grid zx x zy; shape (len(zx), len(zy))."""
        cx, _ = _cauchy_rows(zx, self.supports_x)
        cy, _ = _cauchy_rows(zy, self.supports_y)
        num = cx @ (self.weight_tensor * self.support_values) @ cy.T
        den = cx @ self.weight_tensor @ cy.T
        with np.errstate(divide='ignore', invalid='ignore'):
            vals = num / den
        pole = den == 0.0
        if np.any(pole):
            vals[pole] = np.inf
        if return_pole_mask:
            return vals, pole
        return vals

    def eval_points(self, x, y):
        """Evaluate at paired coordinate arrays (same length)."""
        x = np.atleast_1d(np.asarray(x))
        y = np.atleast_1d(np.asarray(y))
        if x.shape != y.shape:
            raise ValueError('x and y must have matching shapes')
        cx, _ = _cauchy_rows(x.ravel(), self.supports_x)
        cy, _ = _cauchy_rows(y.ravel(), self.supports_y)
        num = np.einsum('ki,ij,kj->k', cx,
                        self.weight_tensor * self.support_values, cy)
        den = np.einsum('ki,ij,kj->k', cx, self.weight_tensor, cy)
        with np.errstate(divide='ignore', invalid='ignore'):
            vals = num / den
        vals[den == 0.0] = np.inf
        return vals.reshape(x.shape)

    def __call__(self, x, y):
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return self.eval_points(np.array([x]), np.array([y]))[0]
        return self.eval_grid(np.asarray(x), np.asarray(y))

    def to_dict(self):
        return {
            'kind': 'bivariate_rational',
            'supports_x': _encode(self.supports_x),
            'supports_y': _encode(self.supports_y),
            'weight_tensor': _encode(self.weight_tensor),
            'support_values': _encode(self.support_values),
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get('kind') != 'bivariate_rational':
            raise ValueError('not a bivariate_rational document')
        return cls(_decode(doc['supports_x']), _decode(doc['supports_y']),
                   _decode(doc['weight_tensor']),
                   _decode(doc['support_values']))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), sort_keys=True)
        if path is not None:
            with open(path, 'w') as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, source):
        try:
            doc = json.loads(source)
        except (ValueError, TypeError):
            with open(source) as fh:
                doc = json.load(fh)
        return cls.from_dict(doc)


def _grid_indices(selection, grid, label):
    """Map forced supports (values or indices) to grid indices."""
    sel = np.atleast_1d(np.asarray(selection))
    if sel.size == 0:
        return []
    if np.issubdtype(sel.dtype, np.integer):
        idx = [int(i) for i in sel]
        if any(not 0 <= i < len(grid) for i in idx):
            raise ValueError('%s forced support index out of range' % label)
    else:
        span = np.abs(grid).max() + 1.0
        idx = []
        for v in sel:
            j = int(np.argmin(np.abs(grid - v)))
            if np.abs(grid[j] - v) > 1e-8 * span:
                raise ValueError('%s forced support %r not on the grid'
                                 % (label, v))
            idx.append(j)
    out = []
    for i in idx:
        if i not in out:
            out.append(i)
    return out


def _pairwise_loewner(f, fx_off, fy_off, fsup):
    """Linearized-residual system over off-support grid pairs.

    Row (p, q) and column (i, j) hold
    [f(x_p, y_q) - f(xi_i, eta_j)] / [(x_p - xi_i)(y_q - eta_j)].
    """
    p, mx = fx_off.shape
    q, my = fy_off.shape
    big = (f[:, :, None, None] - fsup[None, None, :, :]) \
        * fx_off[:, None, :, None] * fy_off[None, :, None, :]
    return big.reshape(p * q, mx * my)


def p_aaa_2d(tensor, tol=1e-13, max_degrees=(100, 100),
             forced_supports=None):
    """Greedy bivariate rational fit with a full weight tensor.

    Supports are grid coordinates picked one per mode per iteration at
    the residual argmax (coordinates already present are skipped); the
    weight tensor is the smallest right singular vector of the
    linearized-residual system over grid points off both support sets.

    Args:
        tensor: SampleTensor with exactly two modes.
        tol: relative stopping tolerance against max |f|.
        max_degrees: per-mode support-count caps.
        forced_supports: optional (x_list, y_list) of grid values or
            indices installed before the first greedy pick.

    Returns:
        (BivariateRational, FitReport).  On an unconverged stop the
        best iterate seen is returned (a late weight solve can land a
        spurious pole on the grid) and final_residual refers to that
        iterate; residual_history keeps the full sequence.
    """
    if tensor.ndim != 2:
        raise ValueError('bivariate engine needs a 2-way tensor')
    if not 0.0 < tol < 1.0:
        raise ValueError('tol must be in (0, 1)')
    zx, zy = tensor.mode_grids
    f = tensor.values
    nx, ny = f.shape
    cap_x, cap_y = (int(m) for m in max_degrees)
    if min(cap_x, cap_y) < 1:
        raise ValueError('max_degrees must be at least 1 per mode')

    scale = float(np.abs(f).max())
    report = FitReport(norm_scale=scale)
    ix, iy = [], []
    if forced_supports is not None:
        fx, fy = forced_supports
        ix = _grid_indices(fx, zx, 'x')
        iy = _grid_indices(fy, zy, 'y')

    approx = None

    def degenerate(mx, my):
        return (nx - mx) * (ny - my) < mx * my

    def solve():
        maskx = np.ones(nx, dtype=bool)
        maskx[ix] = False
        masky = np.ones(ny, dtype=bool)
        masky[iy] = False
        xi, eta = zx[ix], zy[iy]
        cx = 1.0 / (zx[maskx, None] - xi[None, :])
        cy = 1.0 / (zy[masky, None] - eta[None, :])
        fsup = f[np.ix_(ix, iy)]
        system = _pairwise_loewner(f[np.ix_(maskx, masky)], cx, cy, fsup)
        w = _canonical_phase(kernels.min_right_singular_vector(system))
        return BivariateRational(xi, eta, w.reshape(len(ix), len(iy)), fsup)

    if ix or iy:
        # forced coordinates must exist in both modes for the tensor form
        if not ix or not iy:
            raise ValueError('forced supports must cover both modes')
        if degenerate(len(ix), len(iy)):
            report.loewner_degenerate = True
        else:
            approx = solve()
            report.iterations += 1

    best = None
    while not report.loewner_degenerate:
        if approx is None:
            err = np.abs(f - f.mean())
        else:
            err = np.abs(f - approx.eval_grid(zx, zy))
            # Support cross points are claimed by the interpolation
            # convention; a zero weight entry evaluates 0/0 -> inf
            # there and would jam the argmax on an unaddable point.
            err[np.ix_(ix, iy)] = 0.0
        res = float(err.max())
        if approx is not None:
            report.residual_history.append(res)
            if best is None or res < best[0]:
                best = (res, approx, list(ix), list(iy))
            if res <= tol * scale:
                report.converged = True
                break
        i_star, j_star = np.unravel_index(int(np.argmax(err)), err.shape)
        new_x = i_star not in ix and len(ix) < cap_x
        new_y = j_star not in iy and len(iy) < cap_y
        if not (new_x or new_y):
            break
        if degenerate(len(ix) + new_x, len(iy) + new_y):
            report.loewner_degenerate = True
            break
        if new_x:
            ix.append(int(i_star))
        if new_y:
            iy.append(int(j_star))
        approx = solve()
        report.iterations += 1

    if approx is None:
        # nothing solvable; pin the first grid point as a constant
        ix, iy = [0], [0]
        approx = BivariateRational(zx[:1], zy[:1], np.ones((1, 1)),
                                   f[:1, :1])
        report.iterations = max(report.iterations, 1)

    if not report.converged and best is not None \
            and best[0] < report.residual_history[-1]:
        _, approx, ix, iy = best

    if report.converged and report.residual_history:
        report.final_residual = report.residual_history[-1]
    else:
        err = np.abs(f - approx.eval_grid(zx, zy))
        err[np.ix_(ix, iy)] = 0.0
        report.final_residual = float(err.max())
        if not report.residual_history:
            report.residual_history.append(report.final_residual)
    report.support_indices = {'x': list(ix), 'y': list(iy)}
    return approx, report


def two_step(tensor, step1_opts, step2_tol=1e-13, step2_max_degrees=(100, 100)):
    """Capped per-mode fits whose supports warm-start the bivariate engine.

    Args:
        tensor: SampleTensor with two modes.
        step1_opts: QrAaaOptions (or one per mode) with the caps or
            loose tolerances for the per-mode pass.
        step2_tol: relative tolerance for the bivariate refinement.
        step2_max_degrees: per-mode caps for the refinement.

    Returns:
        (BivariateRational, FitReport) from the refinement stage.
    """
    if tensor.ndim != 2:
        raise ValueError('two-step procedure needs a 2-way tensor')
    coarse, _ = tucker_qr_aaa(tensor, step1_opts, allow_unconverged=True)
    return p_aaa_2d(tensor, tol=step2_tol, max_degrees=step2_max_degrees,
                    forced_supports=(coarse.support_points[0],
                                     coarse.support_points[1]))
