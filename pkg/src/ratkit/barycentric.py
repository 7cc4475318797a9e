"""Barycentric rational functions with shared supports across components.

The central object is :class:`VectorRational`: a type (m-1, m-1)
rational map z -> F^n written in barycentric form

    r(z) = sum_v w_v f(zeta_v) / (z - zeta_v)  /  sum_v w_v / (z - zeta_v),

with the value at a support point taken in the l'Hopital limit, i.e.
r(zeta_v) = f(zeta_v) exactly.  All n components share the support
points zeta_v and the weights w_v, hence also their poles.

The row map from support values to grid values is exposed as an
explicit matrix (``barycentric_matrix``), which makes the rational
approximant an approximate row-interpolative decomposition of the
sample matrix: R = H @ F[supports, :].
"""

import json

import numpy as np
import scipy.linalg

# Evaluation points within this relative distance of a support point are
# routed to the limit branch; between grid points the barycentric form
# cancels catastrophically, so "close enough" must mean interpolation.
NEAR_SUPPORT = 100.0 * np.finfo(float).eps


def _as_points(z):
    z = np.asarray(z)
    if z.ndim != 1:
        raise ValueError('grid must be one-dimensional')
    if not np.all(np.isfinite(z)):
        raise ValueError('grid contains non-finite points')
    return z


def cardinal_rows(points, supports, weights):
    """Rows of the barycentric matrix for arbitrary evaluation points.

    Returns (h, pole_mask) where h has shape (len(points), m); a row for
    a point that coincides with (or sits within ``NEAR_SUPPORT`` of)
    support v is the unit row e_v.  ``pole_mask`` marks rows where the
    denominator vanished away from every support.
    """
    points = np.asarray(points)
    diff = points[:, None] - supports[None, :]
    hit = np.abs(diff) <= NEAR_SUPPORT * np.abs(supports)[None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        c = weights[None, :] / diff
        denom = c.sum(axis=1)
        h = c / denom[:, None]
    hit_rows = hit.any(axis=1)
    if np.any(hit_rows):
        rows = np.nonzero(hit_rows)[0]
        cols = np.argmax(hit[rows], axis=1)
        h[rows] = 0.0
        h[rows, cols] = 1.0
    pole_mask = np.zeros(len(points), dtype=bool)
    np.equal(denom, 0.0, out=pole_mask, where=~hit_rows)
    return h, pole_mask


class VectorRational:
    """A vector-valued barycentric rational interpolant.

    Args:
        support_points: the m pairwise distinct supports zeta_v.
        weights: the m nonzero barycentric weights; normalized at
            construction so that sum |w_v|^2 = 1.
        support_values: (m, n) matrix whose row v holds f(zeta_v).

    The object is immutable after construction and safe to evaluate
    concurrently.
    """

    def __init__(self, support_points, weights, support_values):
        zj = np.atleast_1d(np.asarray(support_points))
        wj = np.atleast_1d(np.asarray(weights))
        fj = np.asarray(support_values)
        if fj.ndim == 1:
            fj = fj[:, None]
        if zj.shape[0] != wj.shape[0] or zj.shape[0] != fj.shape[0]:
            raise ValueError('support points, weights and values disagree in length')
        if len(np.unique(zj)) != len(zj):
            raise ValueError('support points must be pairwise distinct')
        if not (np.all(np.isfinite(zj)) and np.all(np.isfinite(fj))):
            raise ValueError('support data must be finite')
        if np.any(wj == 0.0):
            raise ValueError('zero barycentric weight')
        nrm = np.linalg.norm(wj)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise ValueError('invalid weight vector')
        self.support_points = zj
        self.weights = wj / nrm
        self.support_values = fj
        self.is_real = not (np.iscomplexobj(zj) or np.iscomplexobj(wj)
                            or np.iscomplexobj(fj))

    @property
    def degree(self):
        """Rational degree m - 1 for m support points."""
        return len(self.support_points) - 1

    @property
    def ncomponents(self):
        return self.support_values.shape[1]

    def eval_many(self, points, return_pole_mask=False):
        """Evaluate at an array of points; returns shape (len(points), n).

        Points hitting a support (exactly or within the near-support
        band) return the stored support-value row.  At a non-support
        zero of the denominator the row is set to infinity markers; ask
        for ``return_pole_mask`` to locate them.
        """
        points = np.atleast_1d(np.asarray(points))
        h, pole_mask = cardinal_rows(points, self.support_points, self.weights)
        vals = h @ self.support_values
        if np.any(pole_mask):
            vals[pole_mask] = np.inf
        if return_pole_mask:
            return vals, pole_mask
        return vals

    def __call__(self, z):
        """Evaluate at a scalar (returns an n-vector) or an array of points."""
        if np.ndim(z) == 0:
            return self.eval_many(np.array([z]))[0]
        return self.eval_many(z)

    def denominator(self, points):
        """d(z) = sum_v w_v / (z - zeta_v), vectorized over ``points``."""
        points = np.atleast_1d(np.asarray(points))
        with np.errstate(divide='ignore', invalid='ignore'):
            return (self.weights[None, :]
                    / (points[:, None] - self.support_points[None, :])).sum(axis=1)

    def poles(self):
        """Poles of the rational: the m - 1 zeros of the denominator.

        Computed as the finite generalized eigenvalues of the standard
        (m+1) x (m+1) arrowhead pencil built from supports and weights.
        Returns an empty array for m = 1.
        """
        m = len(self.support_points)
        if m < 2:
            return np.array([], dtype=complex)
        e = np.zeros((m + 1, m + 1), dtype=complex)
        e[0, 1:] = self.weights
        e[1:, 0] = 1.0
        e[1:, 1:] = np.diag(self.support_points)
        b = np.eye(m + 1)
        b[0, 0] = 0.0
        ev = scipy.linalg.eigvals(e, b)
        return ev[np.isfinite(ev)]

    # -- serialization -------------------------------------------------

    def to_dict(self):
        def encode(arr):
            if self.is_real:
                return [float(v) for v in np.ravel(arr)]
            return [[float(v.real), float(v.imag)] for v in np.ravel(arr)]

        return {
            'scalar_field': 'real' if self.is_real else 'complex',
            'support_points': encode(self.support_points),
            'weights': encode(self.weights),
            'support_values': [encode(row) for row in self.support_values],
        }

    @classmethod
    def from_dict(cls, doc):
        complex_field = doc['scalar_field'] == 'complex'

        def decode(entries):
            if complex_field:
                return np.array([complex(re, im) for re, im in entries])
            return np.array([float(v) for v in entries])

        obj = cls.__new__(cls)
        obj.support_points = decode(doc['support_points'])
        obj.weights = decode(doc['weights'])
        obj.support_values = np.array([decode(row) for row in doc['support_values']])
        obj.is_real = not complex_field
        return obj

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), sort_keys=True)
        if path is not None:
            with open(path, 'w') as fh:
                fh.write(text + '\n')
        return text

    @classmethod
    def from_json(cls, source):
        try:
            doc = json.loads(source)
        except (ValueError, TypeError):
            with open(source) as fh:
                doc = json.load(fh)
        return cls.from_dict(doc)


class BarycentricMatrix:
    """The explicit row map H with R[i, :] = (H @ F[supports, :])[i, :].

    ``entries`` is (N, m); the row at a grid point equal to support v is
    the unit row e_v (limit convention), and every row sums to one.
    ``support_indices[v]`` is the grid index of support v, or -1 when
    the grid does not contain it.
    """

    def __init__(self, entries, source_grid, support_indices):
        self.entries = entries
        self.source_grid = source_grid
        self.support_indices = support_indices

    def lebesgue_like_constant(self):
        """Max row 1-norm of H; a conditioning diagnostic, nothing is
        asserted about it."""
        return float(np.abs(self.entries).sum(axis=1).max())


def barycentric_matrix(r, grid):
    """Build the barycentric matrix of ``r`` over ``grid``.

    The grid need not contain the support points; rows at grid points
    that do coincide with a support are unit rows.
    """
    grid = _as_points(grid)
    h, _ = cardinal_rows(grid, r.support_points, r.weights)
    diff = np.abs(grid[:, None] - r.support_points[None, :])
    tol = NEAR_SUPPORT * np.abs(r.support_points)[None, :]
    support_indices = np.full(len(r.support_points), -1, dtype=int)
    rows, cols = np.nonzero(diff <= tol)
    support_indices[cols] = rows
    return BarycentricMatrix(h, grid, support_indices)
