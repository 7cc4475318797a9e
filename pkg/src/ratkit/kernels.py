"""Dense linear-algebra and quadrature primitives used by the fitting code.

Everything in this module is deliberately boring: a column-pivoted
Householder QR with an early exit at the numerical rank, thin wrappers
around LAPACK's SVD, a 7/15 Gauss-Kronrod integrator with global
bisection, and trigonometric interpolation through the DFT.  The
interesting algorithms live one level up and only talk to these
routines.
"""

import heapq
from collections import namedtuple

import numpy as np

PivotedQr = namedtuple('PivotedQr', 'q r perm rank')
CompactSvd = namedtuple('CompactSvd', 'u s vh')


class GaussKronrodError(RuntimeError):
    """Raised when the adaptive integrator hits its subdivision limit."""


def pivoted_qr(a, rel_tol=1e-13):
    """Column-pivoted Householder QR, stopping at the numerical rank.

    The factorization proceeds while the pivot diagonal stays at or
    above ``rel_tol`` times the first diagonal; the step at which it
    first drops below is not performed, and the returned factors are
    truncated to the k completed steps.

    Pivoting picks the trailing column of maximal remaining norm, with
    ties broken by the lowest column index so that runs are
    deterministic.  Remaining norms are downdated and recomputed from
    scratch when cancellation has eaten them up.

    Args:
        a: matrix of shape (m, n), real or complex, finite entries.
        rel_tol: relative diagonal cutoff, in (0, 1).

    Returns:
        PivotedQr named tuple with fields ``q`` (m, k) orthonormal,
        ``r`` (k, n) upper trapezoidal, ``perm`` (length-n index array
        with a[:, perm] == q @ r up to roundoff) and ``rank`` k.
    """
    a = np.array(a, copy=True)
    if a.ndim != 2:
        raise ValueError('expected a matrix, got ndim=%d' % a.ndim)
    if not np.all(np.isfinite(a)):
        raise ValueError('matrix contains non-finite entries')
    if not 0.0 < rel_tol < 1.0:
        raise ValueError('rel_tol must lie in (0, 1)')
    if not np.iscomplexobj(a):
        a = a.astype(float, copy=False)

    m, n = a.shape
    kmax = min(m, n)
    perm = np.arange(n)
    norms2 = np.sum(np.abs(a) ** 2, axis=0)
    norms2_ref = norms2.copy()          # recompute guard
    vs = []                             # Householder vectors (unnormalized)
    betas = []                          # 2 / v^H v
    first_diag = None
    k = 0

    for j in range(kmax):
        p = j + np.argmax(norms2[j:])
        if norms2[p] <= 0.0:
            break
        # early exit: the next diagonal magnitude is the pivot column norm
        d = np.sqrt(norms2[p])
        if first_diag is None:
            first_diag = d
        elif d < rel_tol * first_diag:
            break
        if p != j:
            a[:, [j, p]] = a[:, [p, j]]
            perm[[j, p]] = perm[[p, j]]
            norms2[[j, p]] = norms2[[p, j]]
            norms2_ref[[j, p]] = norms2_ref[[p, j]]

        x = a[j:, j]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            break
        phase = x[0] / abs(x[0]) if x[0] != 0.0 else 1.0
        beta_diag = -phase * normx
        v = x.copy()
        v[0] -= beta_diag
        vtv = np.real(np.vdot(v, v))
        if vtv == 0.0:
            # column already of the form beta*e_1; no reflection needed
            v = np.zeros_like(v)
            coef = 0.0
        else:
            coef = 2.0 / vtv
        if coef != 0.0:
            w = coef * (v.conj() @ a[j:, j:])
            a[j:, j:] -= np.multiply.outer(v, w)
        a[j, j] = beta_diag
        a[j + 1:, j] = 0.0
        vs.append(v)
        betas.append(coef)
        k = j + 1

        if j + 1 < n:
            norms2[j + 1:] -= np.abs(a[j, j + 1:]) ** 2
            np.maximum(norms2[j + 1:], 0.0, out=norms2[j + 1:])
            stale = norms2[j + 1:] < 1e-8 * norms2_ref[j + 1:]
            if np.any(stale):
                idx = j + 1 + np.nonzero(stale)[0]
                norms2[idx] = np.sum(np.abs(a[j + 1:, idx]) ** 2, axis=0)
                norms2_ref[idx] = norms2[idx]

    r = np.triu(a[:k, :])
    q = np.zeros((m, k), dtype=a.dtype)
    q[:k, :k] = np.eye(k, dtype=a.dtype)
    for j in range(k - 1, -1, -1):
        if betas[j] != 0.0:
            v = vs[j]
            w = betas[j] * (v.conj() @ q[j:, :])
            q[j:, :] -= np.multiply.outer(v, w)
    return PivotedQr(q, r, perm, k)


def compact_svd(a):
    """Thin SVD, ``a = u @ diag(s) @ vh`` with singular values descending.

    A wrapper around LAPACK keeping the reduced factors only; exists so
    callers depend on one documented contract rather than on numpy's
    surface.
    """
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise ValueError('matrix contains non-finite entries')
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return CompactSvd(u, s, vh)


def min_right_singular_vector(a):
    """Unit right singular vector for the smallest singular value of ``a``.

    For a wide matrix (more columns than rows) this is a null-space
    vector.  The returned vector has unit 2-norm; its sign/phase is the
    deterministic LAPACK convention for the given input.
    """
    a = np.asarray(a)
    m, n = a.shape
    _, _, vh = np.linalg.svd(a, full_matrices=m < n)
    return vh[-1, :].conj()


# 7-point Gauss / 15-point Kronrod pair on [-1, 1].
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])
_EPS = np.finfo(float).eps


def _gk_panel(f, a, b):
    """One 7/15 panel on [a, b]; returns (kronrod, error, resabs)."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fx = np.asarray(f(c + h * _XK), dtype=complex)
    k15 = h * np.sum(_WK * fx)
    g7 = h * np.sum(_WG * fx[1::2])
    resabs = abs(h) * np.sum(_WK * np.abs(fx))
    delta = abs(k15 - g7)
    scaled = 200.0 * delta
    err = scaled ** 1.5 if scaled < 1.0 else delta
    err = max(err, 50.0 * _EPS * resabs)
    return k15, err, resabs


def adaptive_gauss_kronrod(f, lower, upper, abs_tol=1e-13,
                           breakpoints=None, max_subintervals=4096):
    """Globally adaptive Gauss-Kronrod (7/15) integration on [lower, upper].

    The interval (optionally pre-split at ``breakpoints``) is bisected
    where the panel error estimate is largest until the summed estimate
    drops below ``abs_tol``.  The integrand is called with an ndarray of
    15 abscissae at a time and must evaluate elementwise.

    Args:
        f: integrand; called as ``f(x)`` with ``x`` an ndarray.
        lower, upper: integration bounds, lower < upper.
        abs_tol: absolute tolerance on the summed error estimate.
        breakpoints: optional interior split points (e.g. node abscissae
            of a rule under construction); points outside (lower, upper)
            are ignored.
        max_subintervals: subdivision budget, default 2**12.

    Returns:
        (value, err_estimate).  The value is real when the integrand is.

    Raises:
        GaussKronrodError: the budget was exhausted before the estimate
            met ``abs_tol``.
    """
    pts = [lower, upper]
    if breakpoints is not None:
        pts.extend(p for p in np.atleast_1d(breakpoints)
                   if lower < p < upper)
    pts = np.unique(np.asarray(pts, dtype=float))

    heap = []
    total = 0.0 + 0.0j
    total_err = 0.0
    count = 0
    for a, b in zip(pts[:-1], pts[1:]):
        val, err, _ = _gk_panel(f, a, b)
        heapq.heappush(heap, (-err, count, a, b, val))
        total += val
        total_err += err
        count += 1

    while total_err > abs_tol:
        if count >= max_subintervals:
            raise GaussKronrodError(
                'no convergence after %d subintervals on [%g, %g]: '
                'estimate %.3e > tolerance %.3e'
                % (count, lower, upper, total_err, abs_tol))
        neg_err, _, a, b, val = heapq.heappop(heap)
        total -= val
        total_err += neg_err          # neg_err = -err of the popped panel
        c = 0.5 * (a + b)
        for lo, hi in ((a, c), (c, b)):
            v, e, _ = _gk_panel(f, lo, hi)
            heapq.heappush(heap, (-e, count, lo, hi, v))
            total += v
            total_err += e
            count += 1

    if abs(total.imag) <= 1e-14 * (1.0 + abs(total.real)):
        return total.real, total_err
    return total, total_err


def trig_interpolate(values, max_freq):
    """Fourier coefficients c_{-m..m} from equispaced samples on [0, 2pi).

    With N samples f(2*pi*j/N), j = 0..N-1, the DFT bins give the
    coefficients of the trigonometric interpolant; the result is exact
    at the sample angles whenever 2*max_freq + 1 >= N.

    Args:
        values: samples at the N equispaced angles, real or complex.
        max_freq: retain frequencies |k| <= max_freq; requires
            max_freq <= (N - 1) // 2.

    Returns:
        Complex array of length 2*max_freq + 1, ordered k = -m..m.
    """
    values = np.asarray(values)
    n = values.shape[0]
    m = int(max_freq)
    if m < 0:
        raise ValueError('max_freq must be nonnegative')
    if 2 * m + 1 > n:
        raise ValueError('max_freq %d needs at least %d samples, got %d'
                         % (m, 2 * m + 1, n))
    chat = np.fft.fft(values) / n
    coeffs = np.empty(2 * m + 1, dtype=complex)
    coeffs[m] = chat[0]
    for kk in range(1, m + 1):
        coeffs[m + kk] = chat[kk]
        coeffs[m - kk] = chat[n - kk]
    return coeffs


def trig_eval(coeffs, theta):
    """Evaluate a c_{-m..m} coefficient vector at angles ``theta``."""
    coeffs = np.asarray(coeffs)
    m = (coeffs.shape[0] - 1) // 2
    theta = np.asarray(theta, dtype=float)
    ks = np.arange(-m, m + 1)
    return np.exp(1j * np.multiply.outer(theta, ks)) @ coeffs
