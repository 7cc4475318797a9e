"""Quadrature rules on [0, 1] derived from rational fits of a family.

The recipe: sample a large family of integrands on a fine grid, fit the
sample matrix through the rank-revealing compressed engine, and take
the fit's support points as quadrature nodes.  Weights are the
integrals of the barycentric cardinal functions, obtained either by
adaptive Gauss-Kronrod integration of each cardinal or, when the
family publishes exact integrals, by solving c^T = [I_1 .. I_n] *
pinv(F(Z_m, :)).  These are interpolatory rules, not Gaussian ones:
negative weights can and do occur, so the absolute weight sum is kept
as a conditioning diagnostic.
"""

import warnings
from dataclasses import dataclass, field

import json

import numpy as np
from scipy.special import roots_legendre

from . import kernels
from .barycentric import cardinal_rows
from .qraaa import QrAaaOptions, qr_aaa

_METHOD_ALIASES = {
    'gauss_kronrod': 'gauss_kronrod', 'gk': 'gauss_kronrod',
    'exact_integrals': 'exact_integrals', 'exact': 'exact_integrals',
}


@dataclass
class FunctionFamily:
    """A parametrized family of integrands on [0, 1].

    ``sampler(param, x)`` evaluates one member on an array of points;
    ``exact_integrals(param)``, when present, returns the member's
    integral over [0, 1] in closed form.
    """
    name: str
    parameter_grid: object
    sampler: object
    exact_integrals: object = None

    def sample_matrix(self, grid):
        grid = np.asarray(grid)
        cols = [np.asarray(self.sampler(p, grid), dtype=float)
                for p in self.parameter_grid]
        return np.stack(cols, axis=1)


@dataclass
class QuadratureRule:
    """Nodes on [0, 1] with (possibly negative) interpolatory weights."""
    nodes: np.ndarray
    weights: np.ndarray
    method: str

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError('nodes and weights must be matching vectors')
        if len(np.unique(self.nodes)) != len(self.nodes):
            raise ValueError('quadrature nodes must be pairwise distinct')
        if self.nodes.size and (self.nodes.min() < -1e-12
                                or self.nodes.max() > 1.0 + 1e-12):
            raise ValueError('nodes must lie inside [0, 1]')
        if self.method not in ('gauss_kronrod', 'exact_integrals'):
            raise ValueError('unknown weight method %r' % (self.method,))

    @property
    def order(self):
        return len(self.nodes)

    @property
    def abs_weight_sum(self):
        return float(np.abs(self.weights).sum())

    def __call__(self, f):
        return apply_rule(self, f)

    def to_csv(self, path=None):
        lines = ['node,weight']
        lines += ['%.17g,%.17g' % (x, c)
                  for x, c in zip(self.nodes, self.weights)]
        text = '\n'.join(lines) + '\n'
        if path is not None:
            with open(path, 'w') as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path, method='gauss_kronrod'):
        rows = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
        return cls(rows[:, 0], rows[:, 1], method)

    def to_json(self, path=None, metadata=None):
        doc = {
            'method': self.method,
            'nodes': [float(x) for x in self.nodes],
            'weights': [float(c) for c in self.weights],
            'abs_weight_sum': self.abs_weight_sum,
            'metadata': metadata or {},
        }
        text = json.dumps(doc, sort_keys=True)
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
        return cls(np.array(doc['nodes']), np.array(doc['weights']),
                   doc['method'])


def sample_grid(kind='chebyshev', n=5000, n_cluster=50, cluster_target=1e-8):
    """Fine sampling grid on (0, 1] with extra points toward the origin.

    ``chebyshev`` uses second-kind Chebyshev points with the origin
    dropped (families need only be finite on (0, 1], and a grid point at
    exactly 0 turns x**alpha into a jump that wrecks the fit);
    ``legendre`` uses Legendre nodes (strictly interior, required when
    members are singular at 0).  Both are augmented with ``n_cluster``
    log-spaced points running from ``cluster_target`` up toward 1,
    covering scales the base grids miss.
    """
    if kind == 'chebyshev':
        base = (1.0 + np.cos(np.pi * np.arange(n) / n)) / 2.0
    elif kind == 'legendre':
        base = (roots_legendre(n)[0] + 1.0) / 2.0
    else:
        raise ValueError('unknown grid kind %r' % (kind,))
    cluster = np.logspace(np.log10(cluster_target), 0.0, n_cluster + 1)[:-1]
    return np.unique(np.concatenate([base, cluster]))


def _cardinal_integrals(nodes, weights_bary, abs_tol=1e-13):
    inner = sorted(x for x in nodes if 0.0 < x < 1.0)
    c = np.empty(len(nodes))
    for v in range(len(nodes)):
        def cardinal(z, v=v):
            h, _ = cardinal_rows(np.asarray(z), nodes, weights_bary)
            return h[:, v]
        try:
            c[v], _ = kernels.adaptive_gauss_kronrod(
                cardinal, 0.0, 1.0, abs_tol=abs_tol, breakpoints=inner)
        except kernels.GaussKronrodError as exc:
            raise kernels.GaussKronrodError(
                'cardinal function of node %.17g (index %d): %s'
                % (nodes[v], v, exc)) from exc
    return c


def _pinv_weights(exact, fsup, cutoff=1e-13):
    u, s, vh = np.linalg.svd(fsup, full_matrices=False)
    keep = s > cutoff * s[0] if s.size else np.zeros(0, bool)
    if keep.sum() < fsup.shape[0]:
        warnings.warn('support-value matrix is rank deficient '
                      '(%d of %d); weights use a cutoff pseudoinverse'
                      % (int(keep.sum()), fsup.shape[0]))
    inv_s = np.where(keep, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return ((exact @ vh.conj().T) * inv_s) @ u.conj().T


def build_rule(family, grid, opts=None, method='gauss_kronrod',
               samples=None, **kwargs):
    """Fit the sampled family and turn the fit into a quadrature rule.

    Returns (QuadratureRule, QrAaaReport).  ``samples`` may pass a
    precomputed ``family.sample_matrix(grid)`` to avoid resampling when
    several rules are built on the same grid.
    """
    if opts is None:
        opts = QrAaaOptions(**kwargs)
    elif kwargs:
        raise TypeError('pass either opts or keyword options, not both')
    method = _METHOD_ALIASES.get(method)
    if method is None:
        raise ValueError('method must be gauss_kronrod or exact_integrals')
    grid = np.asarray(grid, dtype=float)
    if grid.size and (grid.min() < 0.0 or grid.max() > 1.0):
        raise ValueError('sampling grid must lie inside [0, 1]')
    if method == 'exact_integrals' and family.exact_integrals is None:
        raise ValueError('family %r does not publish exact integrals'
                         % (family.name,))
    f = family.sample_matrix(grid) if samples is None else np.asarray(samples)

    r, report = qr_aaa(grid, f, opts)
    nodes = np.real(r.support_points)
    if method == 'gauss_kronrod':
        c = _cardinal_integrals(nodes, np.real(r.weights))
    else:
        exact = np.array([family.exact_integrals(p)
                          for p in family.parameter_grid])
        sup_rows = report.fit.support_indices
        c = np.real(_pinv_weights(exact, f[sup_rows]))
    order = np.argsort(nodes)
    return QuadratureRule(nodes[order], c[order], method), report


def apply_rule(rule, f):
    """Q[f] = sum_v c_v f(x_v) for a callable integrand."""
    vals = np.asarray(f(rule.nodes))
    if vals.shape != rule.nodes.shape:
        vals = np.array([f(x) for x in rule.nodes], dtype=float)
    return float(rule.weights @ vals)


def validate_rule(rule, family, test_params=None, reference_tol=1e-13):
    """Compare the rule against reference integrals over a parameter set.

    References come from the family's exact integrals when available,
    otherwise from adaptive Gauss-Kronrod at ``reference_tol``.  Returns
    a dict with per-parameter estimates, references and absolute
    errors, plus the absolute weight sum.
    """
    if test_params is None:
        test_params = list(family.parameter_grid)
    estimates = []
    references = []
    for p in test_params:
        estimates.append(apply_rule(rule, lambda x: family.sampler(p, x)))
        if family.exact_integrals is not None:
            references.append(float(family.exact_integrals(p)))
        else:
            val, _ = kernels.adaptive_gauss_kronrod(
                lambda x: np.asarray(family.sampler(p, x), dtype=float),
                0.0, 1.0, abs_tol=reference_tol)
            references.append(float(val))
    estimates = np.array(estimates)
    references = np.array(references)
    errors = np.abs(estimates - references)
    return {
        'params': list(test_params),
        'estimates': estimates,
        'references': references,
        'errors': errors,
        'max_error': float(errors.max()) if errors.size else 0.0,
        'abs_weight_sum': rule.abs_weight_sum,
    }
