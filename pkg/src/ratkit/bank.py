"""Reproducible generators for the test families used across the package.

Every family is deterministic given its identifier, parameters and seed.
The quadrature families live on (0, 1], the tensor families on the
boxes stated in their docstrings, and the synthetic transfer function
and Helmholtz near-field stand-in are seeded random constructions.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .multivariate import SampleTensor
from .quadrature import FunctionFamily, sample_grid

__all__ = [
    'NamedFamily', 'RationalTransfer', 'HelmholtzNearField',
    'family', 'list_families', 'synthetic_transfer', 'nearfield_family',
    'starfish_boundary', 'starfish_target',
    'bessel_j0', 'bessel_y0',
    'integral_pow_log', 'integral_cos_log',
]

EULER_GAMMA = 0.5772156649015328606


# ---------------------------------------------------------------------------
# quadrature families

def _psi1_sampler(p, x):
    return np.asarray(x) ** p


def _psi1_exact(p):
    return 1.0 / (p + 1.0)


def _psi2_sampler(p, x):
    # p >= 0 encodes x**p; p < 0 encodes x**(-1 - p) * log(x)
    x = np.asarray(x)
    if p >= 0:
        return x ** p
    return x ** (-1.0 - p) * np.log(x)


def _psi2_exact(p):
    if p >= 0:
        return 1.0 / (p + 1.0)
    beta = -1.0 - p
    return -1.0 / (beta + 1.0) ** 2


def _psi1_family(n_alpha=5000):
    alpha = np.linspace(0.0, 50.0, n_alpha)
    return FunctionFamily('psi1', alpha, _psi1_sampler, _psi1_exact)


def _psi2_family(n_alpha=5000, n_beta=500):
    alpha = np.linspace(0.0, 50.0, n_alpha)
    beta = np.concatenate([[0.0],
                           np.logspace(-4, np.log10(0.5), n_beta)[:-1]])
    params = np.concatenate([alpha, -1.0 - beta])
    return FunctionFamily('psi2', params, _psi2_sampler, _psi2_exact)


def integral_pow_log(alpha):
    """Closed form of the integral of x**alpha * log(x) over [0, 1]."""
    return -1.0 / (alpha + 1.0) ** 2


def integral_cos_log(alpha):
    """Closed form of the integral of cos(alpha*x) * log(x) over [0, 1]."""
    if alpha == 0.0:
        return -1.0
    from scipy.special import sici
    si, _ = sici(alpha)
    return -si / alpha


def _test_family(name, member, params, exact=None):
    return FunctionFamily(name, np.asarray(params, dtype=float), member,
                          exact)


# ---------------------------------------------------------------------------
# tensor families (uniform grids, domains per docstring)

def f1_sampler(x, y, z):
    """1/(xyz + 2) on [-1, 1]^3."""
    return 1.0 / (x * y * z + 2.0)


def f2_sampler(x, y, z, delta=2.0 ** -6):
    """1/sqrt(x^2 + 2y^2 + 3z^2 + delta) on [-1, 1]^3."""
    return 1.0 / np.sqrt(x ** 2 + 2.0 * y ** 2 + 3.0 * z ** 2 + delta)


def f3_sampler(x, y, z):
    """sqrt(x^2 + 2y + 3z) on [-1, 1] x [0, 1]^2."""
    return np.sqrt(x ** 2 + 2.0 * y + 3.0 * z)


def f4_sampler(x, y, z, t):
    """Oscillatory 4-D target over a degree-4 rational on [-1, 1]^4."""
    return (np.cos(3 * np.pi * x) * np.sin(4 * np.pi * y)
            + np.sin(2 * np.pi * z) * np.sin(5 * np.pi * t)) \
        / (x * y ** 2 + 2.0 * z ** 3 * t + 4.0)


_TENSOR_DEFS = {
    'f1': (f1_sampler, ((-1.0, 1.0, 51),) * 3),
    'f2': (f2_sampler, ((-1.0, 1.0, 151),) * 3),
    'f3': (f3_sampler, ((-1.0, 1.0, 401), (0.0, 1.0, 200), (0.0, 1.0, 200))),
    'f4': (f4_sampler, ((-1.0, 1.0, 51),) * 4),
}


def _tensor_grids(spec, scale=1.0):
    out = []
    for lo, hi, n in spec:
        out.append(np.linspace(lo, hi, max(2, int(round(n * scale)))))
    return tuple(out)


# ---------------------------------------------------------------------------
# starfish boundary and target

def starfish_boundary(theta):
    """Boundary curve (1 + 0.3 sin 5t) (cos t, sin t); returns (x, y)."""
    theta = np.asarray(theta, dtype=float)
    rad = 1.0 + 0.3 * np.sin(5.0 * theta)
    return rad * np.cos(theta), rad * np.sin(theta)


def starfish_target(x, y):
    """-sin(2 pi x) sin(2 pi y), the field extended off the starfish."""
    return -np.sin(2.0 * np.pi * x) * np.sin(2.0 * np.pi * y)


# ---------------------------------------------------------------------------
# synthetic parametric transfer function

@dataclass
class RationalTransfer:
    """Pole-residue form H(s, p) with smooth parameter dependence.

    H(s, p) = sum_k r_k(p) / (s - pi_k(p)) where both the poles and
    residues drift linearly in the normalized log-parameter
    g(p) = log(p / p_min) / log(p_max / p_min).
    """

    pole_base: np.ndarray
    pole_drift: np.ndarray
    residue_base: np.ndarray
    residue_drift: np.ndarray
    p_range: tuple = (10.0 ** -1.5, 1.0)

    def __post_init__(self):
        self.pole_base = np.atleast_1d(np.asarray(self.pole_base,
                                                  dtype=complex))
        self.pole_drift = np.atleast_1d(np.asarray(self.pole_drift,
                                                   dtype=float))
        self.residue_base = np.atleast_1d(np.asarray(self.residue_base,
                                                     dtype=complex))
        self.residue_drift = np.atleast_1d(np.asarray(self.residue_drift,
                                                      dtype=float))
        n = len(self.pole_base)
        if not (len(self.pole_drift) == len(self.residue_base)
                == len(self.residue_drift) == n):
            raise ValueError('pole/residue arrays must share one length')

    @property
    def n_poles(self):
        return len(self.pole_base)

    def _g(self, p):
        lo, hi = self.p_range
        return np.log(np.asarray(p, dtype=float) / lo) / np.log(hi / lo)

    def poles_at(self, p):
        """Pole locations for scalar parameter p, shape (n_poles,)."""
        return self.pole_base * (1.0 + self.pole_drift * self._g(p))

    def residues_at(self, p):
        return self.residue_base * (1.0 + self.residue_drift * self._g(p))

    def __call__(self, s, p):
        s = np.asarray(s)
        g = self._g(p)
        s_b, g_b = np.broadcast_arrays(s, g)
        out = np.zeros(s_b.shape, dtype=complex)
        for k in range(self.n_poles):
            pole = self.pole_base[k] * (1.0 + self.pole_drift[k] * g_b)
            res = self.residue_base[k] * (1.0 + self.residue_drift[k] * g_b)
            out += res / (s_b - pole)
        return out

    def sample(self, s_grid, p_grid):
        """Dense samples on s_grid x p_grid as a SampleTensor."""
        vals = self(np.asarray(s_grid)[:, None], np.asarray(p_grid)[None, :])
        return SampleTensor((s_grid, p_grid), vals)


def synthetic_transfer(seed=0, n_poles=50, s_range=(1j, 1e4j),
                       p_range=(10.0 ** -1.5, 1.0)):
    """Seeded H(s, p) with poles hugging the sampled segment of the axis.

    Pole magnitudes are log-uniform over the s-range; each pole sits at
    a real-part offset of 1 to 10 percent of its own magnitude, so the
    function is finite on the purely imaginary sample segment but hard
    to resolve.  Residues scale with the local magnitude so every pole
    contributes a comparable peak.
    """
    rng = np.random.default_rng(seed)
    lo, hi = abs(s_range[0]), abs(s_range[1])
    mag = 10.0 ** rng.uniform(np.log10(lo), np.log10(hi), n_poles)
    offset = mag * rng.uniform(0.01, 0.10, n_poles)
    pole_base = -offset + 1j * mag
    pole_drift = rng.uniform(-0.3, 0.3, n_poles)
    residue_base = mag * (rng.standard_normal(n_poles)
                          + 1j * rng.standard_normal(n_poles))
    residue_drift = rng.uniform(-0.5, 0.5, n_poles)
    return RationalTransfer(pole_base, pole_drift, residue_base,
                            residue_drift, p_range)


def transfer_default_grids(n_s=500, n_p=50, s_range=(1j, 1e4j),
                           p_range=(10.0 ** -1.5, 1.0)):
    """Log-spaced sample grids along the imaginary s-segment and p-range."""
    s = 1j * np.logspace(np.log10(abs(s_range[0])),
                         np.log10(abs(s_range[1])), n_s)
    p = np.logspace(np.log10(p_range[0]), np.log10(p_range[1]), n_p)
    return s, p


# ---------------------------------------------------------------------------
# Helmholtz near-field stand-in

@dataclass
class HelmholtzNearField:
    """Kernel columns G(x, y; kappa) for close point pairs on a sphere."""

    kappa: np.ndarray
    pairs: np.ndarray          # (n_pairs, 2, 3) unit-sphere points
    distances: np.ndarray

    def matrix(self, kappa=None):
        """Samples, one column per pair, over the kappa grid."""
        k = self.kappa if kappa is None else np.asarray(kappa, dtype=float)
        d = self.distances
        return np.exp(1j * k[:, None] * d[None, :]) / (4.0 * np.pi
                                                       * d[None, :])


def _sphere_points(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def nearfield_family(seed=0, n_pairs=10000, n_kappa=500,
                     kappa_range=(1.0, 80.0), dist_range=(0.05, 0.35)):
    """Seeded near-field pair set with its wavenumber grid.

    Pairs sit on the unit sphere at chord distances drawn uniformly
    from ``dist_range``; the lower cut keeps the kernel finite, the
    upper cut keeps the pairs in the physically-close regime where the
    phase sweep over the kappa range stays moderate.
    """
    rng = np.random.default_rng(seed)
    x = _sphere_points(rng, n_pairs)
    d = rng.uniform(dist_range[0], dist_range[1], n_pairs)
    # second point on the circle at chord distance d from x
    theta = 2.0 * np.arcsin(np.clip(d / 2.0, 0.0, 1.0))
    helper = _sphere_points(rng, n_pairs)
    e1 = helper - np.sum(helper * x, axis=1, keepdims=True) * x
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(x, e1)
    phi = rng.uniform(0.0, 2.0 * np.pi, n_pairs)
    y = (np.cos(theta)[:, None] * x
         + np.sin(theta)[:, None] * (np.cos(phi)[:, None] * e1
                                     + np.sin(phi)[:, None] * e2))
    kappa = np.linspace(kappa_range[0], kappa_range[1], n_kappa)
    pairs = np.stack([x, y], axis=1)
    dist = np.linalg.norm(x - y, axis=1)
    return HelmholtzNearField(kappa, pairs, dist)


# ---------------------------------------------------------------------------
# Bessel functions (series / asymptotic switching)

_BESSEL_SWITCH = 12.0


def _j0_series(x):
    x = np.asarray(x, dtype=float)
    q = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 60):
        term = term * q / (k * k)
        total += term
        if np.all(np.abs(term) < 1e-18 * np.maximum(1.0, np.abs(total))):
            break
    return total


def _y0_series(x):
    x = np.asarray(x, dtype=float)
    q = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.zeros_like(x)
    harmonic = 0.0
    for k in range(1, 60):
        term = term * q / (k * k)
        harmonic += 1.0 / k
        total -= harmonic * term        # signs fold into term via q < 0
        if np.all(np.abs(harmonic * term) < 1e-18):
            break
    j0 = _j0_series(x)
    return (2.0 / np.pi) * ((np.log(x / 2.0) + EULER_GAMMA) * j0 + total)


def _hankel_pq(x):
    """Asymptotic modulus series P, Q for order zero at large x."""
    x = np.asarray(x, dtype=float)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    a = 1.0
    xk = np.ones_like(x)
    for m in range(1, 18):
        a *= -(2.0 * m - 1.0) ** 2 / (8.0 * m)
        xk = xk / x
        term = (a * xk) if (m // 2) % 2 == 0 else (-a * xk)
        if m % 2 == 1:
            q += term
        else:
            p += term
    return p, q


def _bessel0(x, kind):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = x <= _BESSEL_SWITCH
    if np.any(small):
        xs = x[small]
        out[small] = _j0_series(xs) if kind == 'j' else _y0_series(xs)
    if np.any(~small):
        xl = x[~small]
        p, q = _hankel_pq(xl)
        omega = xl - np.pi / 4.0
        amp = np.sqrt(2.0 / (np.pi * xl))
        if kind == 'j':
            out[~small] = amp * (np.cos(omega) * p - np.sin(omega) * q)
        else:
            out[~small] = amp * (np.sin(omega) * p + np.cos(omega) * q)
    return out[0] if scalar else out


def bessel_j0(x):
    """Bessel J0 by power series below 12 and Hankel asymptotics above."""
    return _bessel0(x, 'j')


def bessel_y0(x):
    """Bessel Y0 (positive arguments), same switching as bessel_j0."""
    if np.any(np.asarray(x) <= 0):
        raise ValueError('bessel_y0 needs positive arguments')
    return _bessel0(x, 'y')


_TEST_INTEGRANDS = {
    'psi1-sin': (lambda a, x: x ** a * np.sin(x),
                 'x**alpha sin x test integrands', None),
    'psi1-cos': (lambda a, x: x ** a * np.cos(x),
                 'x**alpha cos x test integrands', None),
    'psi2-powlog': (lambda a, x: x ** a * np.log(x),
                    'x**alpha log x test integrands', integral_pow_log),
    'psi2-coslog': (lambda a, x: np.cos(a * x) * np.log(x),
                    'cos(alpha x) log x test integrands', integral_cos_log),
}


# ---------------------------------------------------------------------------
# registry

@dataclass
class NamedFamily:
    """A registered family plus everything needed to reproduce it."""

    identifier: str
    kind: str                  # quadrature | tensor | matrix | boundary
                               # | transfer | kernel
    description: str
    default_grids: tuple = ()
    sampler: object = None
    exact: object = None
    rng_seed: object = None
    payload: object = None

    def sample_matrix(self, max_cols=None):
        """A 2-D sample matrix (first column the grid where meaningful)."""
        if self.kind == 'quadrature':
            fam, grid = self.payload
            mat = fam.sample_matrix(grid)
            if max_cols is not None:
                mat = mat[:, :max_cols]
            return np.column_stack([grid, mat]), True
        if self.kind == 'matrix':
            points, values = self.payload
            if max_cols is not None:
                values = values[:, :max_cols]
            return np.column_stack([points, values]), True
        if self.kind == 'tensor':
            tensor = self.payload
            unf = tensor.unfold(0)
            if max_cols is not None:
                unf = unf[:, :max_cols]
            return np.column_stack([tensor.mode_grids[0], unf]), True
        if self.kind == 'transfer':
            transfer = self.payload
            s, p = self.default_grids
            tensor = transfer.sample(s, p)
            return np.column_stack([s, tensor.values]), True
        if self.kind == 'kernel':
            nf = self.payload
            mat = nf.matrix()
            if max_cols is not None:
                mat = mat[:, :max_cols]
            return np.column_stack([nf.kappa.astype(complex), mat]), True
        if self.kind == 'boundary':
            theta = np.linspace(0.0, 2.0 * np.pi, 501)[:-1]
            bx, by = starfish_boundary(theta)
            return np.column_stack([theta, bx, by,
                                    starfish_target(bx, by)]), False
        raise ValueError('family %r has no sample matrix' % self.identifier)


def _tensor_family(name, scale=1.0, **params):
    sampler, spec = _TENSOR_DEFS[name]
    grids = _tensor_grids(spec, scale)
    if params:
        base = sampler
        sam = lambda *a: base(*a, **params)
    else:
        sam = sampler
    tensor = SampleTensor.from_function(sam, grids)
    return NamedFamily(name, 'tensor', sampler.__doc__.strip(),
                       default_grids=grids, sampler=sam, payload=tensor)


def family(identifier, **params):
    """Look up a named family; unknown identifiers raise KeyError.

    Known identifiers: psi1, psi2, psi1-sin, psi1-cos, psi2-powlog,
    psi2-coslog, f1..f4 (tensor; f2 takes delta=..., all take
    scale=... to shrink grids), fK-modeL unfoldings, starfish, hsp,
    nearfield.
    """
    if identifier in ('psi1', 'psi2'):
        fam = _psi1_family(**params) if identifier == 'psi1' \
            else _psi2_family(**params)
        grid = sample_grid('chebyshev' if identifier == 'psi1'
                           else 'legendre')
        return NamedFamily(identifier, 'quadrature',
                           'parametric integrand family on (0, 1]',
                           default_grids=(grid,), sampler=fam.sampler,
                           exact=fam.exact_integrals, payload=(fam, grid))
    if identifier in _TEST_INTEGRANDS:
        member, doc, exact = _TEST_INTEGRANDS[identifier]
        alphas = params.pop('alphas', np.linspace(0.0, 10.0, 21))
        fam = _test_family(identifier, member, alphas, exact=exact)
        grid = sample_grid('legendre' if identifier.startswith('psi2')
                           else 'chebyshev')
        return NamedFamily(identifier, 'quadrature', doc,
                           default_grids=(grid,), sampler=fam.sampler,
                           exact=exact, payload=(fam, grid))
    if identifier in _TENSOR_DEFS:
        return _tensor_family(identifier, **params)
    if '-mode' in identifier:
        base, _, mode = identifier.partition('-mode')
        if base in _TENSOR_DEFS and mode.isdigit():
            nf = _tensor_family(base, **params)
            ell = int(mode) - 1
            tensor = nf.payload
            if not 0 <= ell < tensor.ndim:
                raise KeyError('mode %s out of range for %s' % (mode, base))
            return NamedFamily(identifier, 'matrix',
                               'mode %s unfolding of %s' % (mode, base),
                               default_grids=(tensor.mode_grids[ell],),
                               payload=(tensor.mode_grids[ell],
                                        tensor.unfold(ell)))
    if identifier == 'starfish':
        return NamedFamily(identifier, 'boundary',
                           'starfish boundary with oscillatory target',
                           sampler=starfish_target,
                           payload=starfish_boundary)
    if identifier == 'hsp':
        seed = params.pop('seed', 0)
        transfer = synthetic_transfer(seed=seed, **params)
        s, p = transfer_default_grids()
        return NamedFamily(identifier, 'transfer',
                           'seeded pole-residue transfer function H(s, p)',
                           default_grids=(s, p), sampler=transfer,
                           rng_seed=seed, payload=transfer)
    if identifier == 'nearfield':
        seed = params.pop('seed', 0)
        nf = nearfield_family(seed=seed, **params)
        return NamedFamily(identifier, 'kernel',
                           'Helmholtz kernel over close sphere pairs',
                           default_grids=(nf.kappa,), rng_seed=seed,
                           payload=nf)
    raise KeyError('unknown family %r' % identifier)


def list_families():
    """Identifiers accepted by :func:`family` (mode unfoldings implied)."""
    return ['f1', 'f2', 'f3', 'f4', 'hsp', 'nearfield', 'psi1', 'psi1-cos',
            'psi1-sin', 'psi2', 'psi2-coslog', 'psi2-powlog', 'starfish']
