"""ratkit: vector-valued rational approximation and its applications.

Greedy barycentric fitting (AAA, SV-AAA, QR-AAA and a parallel
split/join variant), quadrature rules built from rational approximants,
separable and bivariate multivariate approximation, and analytic
function extension, with a CLI front end.
"""

__version__ = '0.1.0'

from .kernels import (adaptive_gauss_kronrod, compact_svd,
                      min_right_singular_vector, pivoted_qr,
                      trig_interpolate)
from .barycentric import VectorRational, barycentric_matrix
from .aaa import FitOptions, FitReport, aaa, residual, sv_aaa
from .qraaa import QrAaaOptions, QrAaaReport, hoelder_bound_terms, pqr_aaa, qr_aaa
from .quadrature import FunctionFamily, QuadratureRule, apply_rule, build_rule, validate_rule
from .multivariate import (BivariateRational, SampleTensor, TuckerRational,
                           p_aaa_2d, tucker_qr_aaa, two_step)
from .extension import (FourierRadialExtension, RayExtension, StarDomain,
                        extend_norm_function, fourier_radial_extend, ray_aaa)
from . import bank, io

__all__ = [
    'adaptive_gauss_kronrod', 'compact_svd', 'min_right_singular_vector',
    'pivoted_qr', 'trig_interpolate',
    'VectorRational', 'barycentric_matrix',
    'FitOptions', 'FitReport', 'aaa', 'sv_aaa', 'residual',
    'QrAaaOptions', 'QrAaaReport', 'qr_aaa', 'pqr_aaa', 'hoelder_bound_terms',
    'FunctionFamily', 'QuadratureRule', 'build_rule', 'apply_rule', 'validate_rule',
    'SampleTensor', 'TuckerRational', 'BivariateRational',
    'tucker_qr_aaa', 'p_aaa_2d', 'two_step',
    'StarDomain', 'RayExtension', 'FourierRadialExtension',
    'ray_aaa', 'fourier_radial_extend', 'extend_norm_function',
    'bank', 'io',
]
