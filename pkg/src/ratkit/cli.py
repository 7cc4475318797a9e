"""Command line front end for fits, quadrature, multivariate runs,
extensions, and the parallel compression demo.

Every run writes into the --out directory (created on demand):

* ``config.json`` echoes the resolved run configuration,
* a model / report pair in JSON,
* delimited CSV artifacts alongside rendered PNG figures,
* ``timings.json`` with wall-clock stage times, kept in its own file
  so the remaining JSON output is byte-identical across repeat runs
  of the same configuration and seed.

Exit codes: 0 on success, 2 on input or usage errors, 3 when a fit
stops without converging (artifacts are still written in that case).
"""

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import bank, io, plotting
from .aaa import FitOptions, aaa, sv_aaa
from .extension import StarDomain, extend_norm_function, \
    fourier_radial_extend, ray_aaa
from .multivariate import SampleTensor, _encode, tucker_qr_aaa, two_step
from .qraaa import QrAaaOptions, pqr_aaa, qr_aaa
from .quadrature import build_rule, validate_rule

# compress splits its input into this many column blocks regardless of
# --workers, so the numerical output is identical for any worker count
N_COMPRESS_BLOCKS = 4


@dataclass
class RunConfig:
    """Resolved command options; validation errors mean exit code 2."""

    subcommand: str
    family: str = None
    input: str = None
    partitions: str = None
    preset: str = None
    engine: str = None
    method: str = None
    tol: float = None
    tol_qr: float = None
    max_degree: int = None
    norm: str = None
    workers: int = None
    seed: int = None
    delta: float = None
    out: str = '.'
    emit_contours: bool = False
    emit_partitions: bool = False
    action: str = None
    max_cols: int = None

    def __post_init__(self):
        if self.family is not None and self.input is not None:
            raise ValueError('give either --family or --input, not both')
        for name in ('tol', 'tol_qr'):
            v = getattr(self, name)
            if v is not None and not 0.0 < v < 1.0:
                raise ValueError('--%s must lie in (0, 1)'
                                 % name.replace('_', '-'))
        if self.max_degree is not None and self.max_degree < 1:
            raise ValueError('--max-degree must be >= 1')
        if self.workers is not None and self.workers < 1:
            raise ValueError('--workers must be >= 1')
        if self.max_cols is not None and self.max_cols < 1:
            raise ValueError('--max-cols must be >= 1')

    def to_dict(self):
        doc = asdict(self)
        # the destination directory is not part of the numerical
        # configuration; dropping it keeps the echo byte-identical
        # for the same run written anywhere
        doc.pop('out')
        return doc


_PRESETS = {
    'table1-f1': ('tucker', {'family': 'f1', 'tol': 1e-8, 'tol_qr': 1e-8}),
    'table1-f2': ('tucker', {'family': 'f2', 'tol': 1e-8, 'tol_qr': 1e-8,
                             'delta': 2.0 ** -6}),
    'table1-f3': ('tucker', {'family': 'f3', 'tol': 1e-8, 'tol_qr': 1e-8}),
    'table1-f4': ('tucker', {'family': 'f4', 'tol': 1e-8, 'tol_qr': 1e-8}),
    'starfish': ('extend', {'family': 'starfish'}),
    'norm': ('extend', {'family': 'norm'}),
    'nearfield': ('compress', {'family': 'nearfield', 'tol': 1e-6}),
    'hsp': ('twostep', {'family': 'hsp', 'tol': 1e-5}),
}


def _apply_preset(cfg):
    if cfg.preset is None:
        return
    if cfg.preset not in _PRESETS:
        raise ValueError('unknown preset %r (known: %s)'
                         % (cfg.preset, ', '.join(sorted(_PRESETS))))
    sub, defaults = _PRESETS[cfg.preset]
    if sub != cfg.subcommand:
        raise ValueError('preset %r belongs to the %r subcommand'
                         % (cfg.preset, sub))
    for key, value in defaults.items():
        if getattr(cfg, key) is None:
            setattr(cfg, key, value)


def _resolve_workers(requested):
    env = os.environ.get('RATKIT_THREADS')
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ValueError('RATKIT_THREADS must be an integer, got %r'
                             % env) from None
        if n < 1:
            raise ValueError('RATKIT_THREADS must be >= 1')
        return n
    if requested is not None:
        return requested
    return os.cpu_count() or 1


def _qr_options(cfg, default_tol=1e-13, default_degree=100):
    tol = cfg.tol if cfg.tol is not None else default_tol
    tol_qr = cfg.tol_qr if cfg.tol_qr is not None else tol
    degree = cfg.max_degree if cfg.max_degree is not None else default_degree
    norm_p = 2.0 if cfg.norm == '2' else np.inf
    return QrAaaOptions(tol_aaa=tol, tol_qr=tol_qr, max_degree=degree,
                        norm_p=norm_p)


def _family_params(cfg, identifier):
    params = {}
    base = identifier.partition('-mode')[0]
    if cfg.delta is not None:
        if base != 'f2':
            raise ValueError('--delta only applies to the f2 family')
        params['delta'] = cfg.delta
    if cfg.seed is not None and base in ('hsp', 'nearfield'):
        params['seed'] = cfg.seed
    return params


def _write_json(path, doc):
    with open(path, 'w') as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write('\n')


class _Timer:
    def __init__(self):
        self.stages = {}
        self._last = time.perf_counter()

    def lap(self, name):
        now = time.perf_counter()
        self.stages[name] = round(now - self._last, 6)
        self._last = now

    def write(self, path):
        _write_json(path, {'seconds': self.stages,
                           'total': round(sum(self.stages.values()), 6)})


def _real_axis(grid):
    """Collapse a possibly complex grid to a real plotting abscissa."""
    g = np.asarray(grid)
    if not np.iscomplexobj(g):
        return np.asarray(g, dtype=float), 'point'
    scale = np.abs(g).max() or 1.0
    if np.abs(g.imag).max() <= 1e-14 * scale:
        return g.real.copy(), 'point'
    if np.abs(g.real).max() <= 1e-14 * scale:
        return g.imag.copy(), 'Im point'
    return np.abs(g), '|point|'


def _drop_null_imag(arr):
    if np.iscomplexobj(arr) and np.all(arr.imag == 0.0):
        return arr.real.copy()
    return arr


def _param_label(p):
    if isinstance(p, tuple):
        return ':'.join(str(part) for part in p)
    return io.format_value(float(p))


# ---------------------------------------------------------------------------
# subcommand handlers

def cmd_fit(cfg):
    timer = _Timer()
    if cfg.input is None and cfg.family is None:
        raise ValueError('fit needs --family or --input')
    if cfg.input is not None:
        grid, values, _ = io.read_samples_csv(cfg.input)
        source = cfg.input
    else:
        nf = bank.family(cfg.family, **_family_params(cfg, cfg.family))
        mat, has_grid = nf.sample_matrix()
        if not has_grid:
            raise ValueError("family %r has no shared sample grid; "
                             "use the extend subcommand" % cfg.family)
        grid, values = mat[:, 0], mat[:, 1:]
        source = cfg.family
    grid = _drop_null_imag(grid)
    values = _drop_null_imag(values)
    timer.lap('load')

    engine = cfg.engine or 'qr-aaa'
    opts = _qr_options(cfg)
    if engine == 'aaa':
        if values.shape[1] != 1:
            raise ValueError('the aaa engine fits a single column; '
                             'input has %d' % values.shape[1])
        model, fit = aaa(grid, values[:, 0], opts.fit_options())
        report = {'engine': engine, 'source': source, 'degree': model.degree,
                  'fit': fit.to_dict()}
    elif engine == 'sv-aaa':
        model, fit = sv_aaa(grid, values, opts.fit_options())
        report = {'engine': engine, 'source': source, 'degree': model.degree,
                  'fit': fit.to_dict()}
    else:
        model, rep = qr_aaa(grid, values, opts)
        fit = rep.fit
        report = {'engine': engine, 'source': source, 'degree': model.degree}
        report.update(rep.to_dict())
    timer.lap('fit')

    scale = np.abs(values).max() or 1.0
    resid = np.abs(model(grid) - values).max(axis=1) / scale
    out = cfg.out
    _write_json(os.path.join(out, 'config.json'), cfg.to_dict())
    model.to_json(os.path.join(out, 'model.json'))
    _write_json(os.path.join(out, 'report.json'), report)
    io.write_samples_csv(os.path.join(out, 'residual.csv'), grid,
                         resid[:, None], grid_label='point',
                         value_labels=['residual'])
    x, xlabel = _real_axis(grid)
    order = np.argsort(x)
    plotting.save_error_curves(os.path.join(out, 'residual.png'),
                               x[order], {'relative residual': resid[order]},
                               xlabel=xlabel,
                               title='%s (%s)' % (source, engine))
    plotting.save_residual_history(os.path.join(out, 'residual_history.png'),
                                   fit.residual_history, tol=opts.tol_aaa)
    timer.lap('write')
    timer.write(os.path.join(out, 'timings.json'))
    return 0 if fit.converged else 3


def cmd_quad(cfg):
    timer = _Timer()
    ident = cfg.family or 'psi1'
    if cfg.input is not None:
        raise ValueError('quad works on named integrand families')
    nf = bank.family(ident, **_family_params(cfg, ident))
    if nf.kind != 'quadrature':
        raise ValueError('family %r is not an integrand family' % ident)
    qfam, grid = nf.payload
    method = cfg.method or 'gk'
    opts = _qr_options(cfg)
    rule, rep = build_rule(qfam, grid, opts, method=method)
    timer.lap('build')
    val = validate_rule(rule, qfam)
    timer.lap('validate')

    out = cfg.out
    _write_json(os.path.join(out, 'config.json'), cfg.to_dict())
    rule.to_csv(os.path.join(out, 'rule.csv'))
    rule.to_json(os.path.join(out, 'rule.json'),
                 metadata={'family': ident, 'method': method})
    _write_json(os.path.join(out, 'report.json'),
                {'family': ident, 'method': method,
                 'order': int(len(rule.nodes)),
                 'abs_weight_sum': val['abs_weight_sum'],
                 'max_error': val['max_error'],
                 'qr': rep.to_dict()})
    with open(os.path.join(out, 'validation.csv'), 'w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(['param', 'estimate', 'reference', 'abs_error'])
        for p, est, ref, err in zip(val['params'], val['estimates'],
                                    val['references'], val['errors']):
            writer.writerow([_param_label(p), io.format_value(est),
                             io.format_value(ref), io.format_value(err)])
    plotting.save_rule(os.path.join(out, 'rule.png'),
                       rule, title='%s rule, order %d' % (ident,
                                                          len(rule.nodes)))
    idx = np.arange(len(val['errors']))
    plotting.save_error_curves(os.path.join(out, 'validation.png'), idx,
                               {'abs quadrature error': val['errors']},
                               xlabel='family member',
                               title='%s validation' % ident)
    timer.lap('write')
    timer.write(os.path.join(out, 'timings.json'))
    return 0 if rep.fit.converged else 3


def cmd_tucker(cfg):
    timer = _Timer()
    if cfg.input is not None:
        tensor = io.load_tensor(cfg.input)
        sampler = None
        source = cfg.input
    else:
        if cfg.family is None:
            raise ValueError('tucker needs --family, --preset, or --input')
        nf = bank.family(cfg.family, **_family_params(cfg, cfg.family))
        if nf.kind != 'tensor':
            raise ValueError('family %r is not a tensor family' % cfg.family)
        tensor = nf.payload
        sampler = nf.sampler
        source = cfg.family
    timer.lap('load')

    opts = _qr_options(cfg)
    workers = _resolve_workers(cfg.workers)
    approx, reports = tucker_qr_aaa(tensor, opts, n_workers=workers)
    timer.lap('fit')

    scale = np.linalg.norm(tensor.values.ravel()) or 1.0
    on_grid = approx.eval_grid(tensor.mode_grids)
    rel = float(np.linalg.norm((on_grid - tensor.values).ravel()) / scale)
    mid_rel = None
    if sampler is not None:
        mids = tuple(0.5 * (g[:-1] + g[1:]) for g in tensor.mode_grids)
        ref = SampleTensor.from_function(sampler, mids)
        mid_scale = np.linalg.norm(ref.values.ravel()) or 1.0
        diff = approx.eval_grid(mids) - ref.values
        mid_rel = float(np.linalg.norm(diff.ravel()) / mid_scale)
    timer.lap('validate')

    out = cfg.out
    _write_json(os.path.join(out, 'config.json'), cfg.to_dict())
    _write_json(os.path.join(out, 'model.json'),
                {'kind': 'tucker_rational',
                 'support_points': [_encode(s) for s in approx.support_points],
                 'weights': [_encode(w) for w in approx.weights],
                 'core': _encode(approx.core)})
    _write_json(os.path.join(out, 'report.json'),
                {'source': source,
                 'degrees': [int(d) for d in approx.degrees],
                 'qr_ranks': [int(r.qr_rank) for r in reports],
                 'sample_rel_error': rel,
                 'midpoint_rel_error': mid_rel,
                 'modes': [r.to_dict() for r in reports]})
    with open(os.path.join(out, 'validation.csv'), 'w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(['mode', 'qr_rank', 'degree', 'iterations',
                         'converged', 'final_residual'])
        for ell, r in enumerate(reports):
            writer.writerow([ell, r.qr_rank, approx.degrees[ell],
                             r.fit.iterations, r.fit.converged,
                             io.format_value(r.fit.final_residual)])
    for ell, r in enumerate(reports):
        plotting.save_residual_history(
            os.path.join(out, 'residual_mode%d.png' % (ell + 1)),
            r.fit.residual_history, tol=opts.tol_aaa,
            title='%s mode %d' % (source, ell + 1))
    timer.lap('write')
    timer.write(os.path.join(out, 'timings.json'))
    return 0 if all(r.fit.converged for r in reports) else 3


# step-1 caps for the seeded transfer-function demo; the frequency
# mode is fitted tightly, the parameter mode only loosely
_HSP_STEP1 = (dict(tol_aaa=1e-9, tol_qr=1e-9, max_degree=30),
              dict(tol_aaa=1e-4, tol_qr=1e-4, max_degree=16))


def cmd_twostep(cfg):
    timer = _Timer()
    transfer = None
    if cfg.input is not None:
        tensor = io.load_tensor(cfg.input)
        if tensor.ndim != 2:
            raise ValueError('twostep needs a 2-way tensor, got %d modes'
                             % tensor.ndim)
        step1 = [QrAaaOptions(tol_aaa=1e-4, tol_qr=1e-4, max_degree=20)] * 2
        source = cfg.input
    else:
        ident = cfg.family or 'hsp'
        if ident != 'hsp':
            raise ValueError("twostep knows the 'hsp' family; "
                             "pass other data via --input")
        seed = cfg.seed if cfg.seed is not None else 7
        transfer = bank.synthetic_transfer(seed=seed, n_poles=12)
        s = 1j * np.logspace(0.0, 4.0, 240)
        p = np.logspace(-1.5, 0.0, 48)
        tensor = transfer.sample(s, p)
        step1 = [QrAaaOptions(**kw) for kw in _HSP_STEP1]
        source = ident
    timer.lap('load')

    step2_tol = cfg.tol if cfg.tol is not None else 1e-5
    if cfg.max_degree is not None:
        caps = (cfg.max_degree, cfg.max_degree)
    else:
        caps = (40, 25)
    approx, rep = two_step(tensor, step1, step2_tol=step2_tol,
                           step2_max_degrees=caps)
    timer.lap('fit')

    scale = np.abs(tensor.values).max() or 1.0
    if transfer is not None:
        gx, gy = tensor.mode_grids
        sv = 1j * np.sqrt(gx.imag[:-1] * gx.imag[1:])
        pv = np.sqrt(gy[:-1] * gy[1:])
        ref = transfer.sample(sv, pv).values
    else:
        gx, gy = tensor.mode_grids
        sv = 0.5 * (gx[:-1] + gx[1:])
        pv = 0.5 * (gy[:-1] + gy[1:])
        ref = None
    if ref is not None:
        err = np.abs(approx.eval_grid(sv, pv) - ref) / scale
    else:
        err = np.abs(approx.eval_grid(tensor.mode_grids[0],
                                      tensor.mode_grids[1])
                     - tensor.values) / scale
        sv, pv = tensor.mode_grids
    val_max = float(err.max())
    timer.lap('validate')

    out = cfg.out
    _write_json(os.path.join(out, 'config.json'), cfg.to_dict())
    _write_json(os.path.join(out, 'model.json'),
                {'kind': 'bivariate_rational',
                 'supports_x': _encode(approx.supports_x),
                 'supports_y': _encode(approx.supports_y),
                 'weight_tensor': _encode(approx.weight_tensor),
                 'support_values': _encode(approx.support_values)})
    _write_json(os.path.join(out, 'report.json'),
                {'source': source,
                 'degrees': [int(d) for d in approx.degree],
                 'step2_tol': step2_tol,
                 'validation_max_rel_error': val_max,
                 'fit': rep.to_dict()})
    ax_x, _ = _real_axis(sv)
    ax_y, _ = _real_axis(pv)
    io.write_error_field_csv(os.path.join(out, 'validation.csv'),
                             ax_x, ax_y, err)
    plotting.save_residual_history(os.path.join(out, 'residual_history.png'),
                                   rep.residual_history, tol=step2_tol,
                                   title='%s refinement' % source)
    plotting.save_error_field(os.path.join(out, 'error_field.png'),
                              ax_x, ax_y, err,
                              title='%s validation error' % source)
    timer.lap('write')
    timer.write(os.path.join(out, 'timings.json'))
    return 0 if rep.converged else 3


def _write_contour_csv(path, segments):
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(['segment', 'x', 'y'])
        for k, seg in enumerate(segments):
            for vx, vy in seg:
                writer.writerow([k, io.format_value(vx),
                                 io.format_value(vy)])


def _extend_starfish(cfg, timer):
    domain = StarDomain(bank.starfish_boundary)
    opts = _qr_options(cfg)
    ext = fourier_radial_extend(bank.starfish_target, domain,
                                max_freq=200, n_rays=500, qr_opts=opts)
    rep = ext.report
    rays = ray_aaa(bank.starfish_target, domain, n_rays=500)
    timer.lap('fit')

    theta = np.linspace(0.0, 2.0 * np.pi, 360, endpoint=False)
    rho = np.linspace(0.9, 1.0, 21)
    pg, tg = np.meshgrid(rho, theta, indexing='ij')
    x, y = domain.point(pg.ravel(), tg.ravel())
    exact = bank.starfish_target(x, y)
    est = ext.eval_polar(pg.ravel(), tg.ravel())
    scale = np.abs(exact).max() or 1.0
    annulus_err = float(np.abs(est - exact).max() / scale)

    # one-wavelength probe: the target has unit wavelength, so step
    # 1.5 length units out along each ray
    bx, by = domain.boundary(theta)
    rho_out = 1.0 + 1.5 / np.hypot(bx, by)
    xo, yo = domain.point(rho_out, theta)
    probe = np.abs(ext.eval_polar(rho_out, theta)
                   - bank.starfish_target(xo, yo))
    probe_err = float(probe.max() / scale)

    # square box field for the figure and the contour extraction
    box = np.linspace(-2.8, 2.8, 201)
    gx, gy = np.meshgrid(box, box, indexing='ij')
    field = np.abs(ext.eval_xy(gx, gy)
                   - bank.starfish_target(gx, gy)) / scale
    timer.lap('validate')

    out = cfg.out
    _write_json(os.path.join(out, 'config.json'), cfg.to_dict())
    _write_json(os.path.join(out, 'model.json'),
                {'kind': 'fourier_radial_extension',
                 'max_freq': int(ext.max_freq),
                 'is_real': bool(ext.is_real),
                 'symmetry_defect': float(ext.symmetry_defect),
                 'radial': ext.radial_rational.to_dict()})
    degrees = rays.degrees
    _write_json(os.path.join(out, 'report.json'),
                {'preset': 'starfish',
                 'annulus_rel_error': annulus_err,
                 'wavelength_probe_rel_error': probe_err,
                 'radial_degree': int(ext.radial_rational.degree),
                 'ray_max_degree': int(np.max(degrees)),
                 'ray_mean_degree': float(np.mean(degrees)),
                 'rays_converged': int(np.sum(rays.converged)),
                 'qr': rep.to_dict()})
    io.write_error_field_csv(os.path.join(out, 'error_field.csv'),
                             box, box, field)
    bcx, bcy = domain.boundary(np.linspace(0.0, 2.0 * np.pi, 721))
    plotting.save_error_field(os.path.join(out, 'error_field.png'),
                              box, box, field, boundary=(bcx, bcy),
                              title='starfish extension error')
    if cfg.emit_contours:
        levels = plotting.extract_contours(box, box,
                                           np.log10(np.maximum(field, 1e-17)),
                                           [-8.0, -1.0])
        _write_contour_csv(os.path.join(out, 'contour-8.csv'), levels[-8.0])
        _write_contour_csv(os.path.join(out, 'contour-1.csv'), levels[-1.0])
    timer.lap('write')
    timer.write(os.path.join(out, 'timings.json'))
    return 0 if rep.fit.converged else 3


def _extend_norm(cfg, timer):
    kwargs = {}
    if cfg.tol is not None:
        kwargs['tol'] = cfg.tol
    rep = extend_norm_function(**kwargs)
    timer.lap('fit')

    out = cfg.out
    _write_json(os.path.join(out, 'config.json'), cfg.to_dict())
    near = rep.max_error_near(0.0, 0.0, 0.1)
    # (0, 3) sits on both evaluation grids, so a tight ball reads the
    # error at exactly that point
    at_probe = rep.max_error_near(0.0, 3.0, 1e-9)
    _write_json(os.path.join(out, 'report.json'),
                {'preset': 'norm',
                 'error_at_probe': {k: float(v) for k, v in at_probe.items()},
                 'error_near_origin': {k: float(v) for k, v in near.items()},
                 'in_domain_errors': {k: float(v)
                                      for k, v in rep.in_domain_errors.items()},
                 'two_step': rep.two_step_report.to_dict(),
                 'two_step_degrees': [int(d) for d in rep.two_step_fit.degree],
                 'separable_modes': [r.to_dict()
                                     for r in rep.separable_reports],
                 'ray_max_degree': int(np.max(rep.rays.degrees)),
                 'ray_mean_degree': float(np.mean(rep.rays.degrees))})
    methods = sorted(rep.slice_errors)
    slice_cols = np.column_stack([rep.slice_errors[m] for m in methods])
    io.write_samples_csv(os.path.join(out, 'slice.csv'), rep.slice_y,
                         slice_cols, grid_label='y', value_labels=methods)
    for name in methods:
        io.write_error_field_csv(
            os.path.join(out, 'field_%s.csv' % name),
            rep.strip_x, rep.strip_y, rep.errors[name])
    plotting.save_error_curves(os.path.join(out, 'slice_errors.png'),
                               rep.slice_y,
                               {m: rep.slice_errors[m] for m in methods},
                               xlabel='y', title='extension error on x = 0')
    plotting.save_error_field(os.path.join(out, 'field_two_step.png'),
                              rep.strip_x, rep.strip_y,
                              rep.errors['two_step'],
                              title='two-step extension error')
    timer.lap('write')
    timer.write(os.path.join(out, 'timings.json'))
    return 0 if rep.two_step_report.converged else 3


def cmd_extend(cfg):
    timer = _Timer()
    which = cfg.family or cfg.preset or 'starfish'
    if which == 'starfish':
        return _extend_starfish(cfg, timer)
    if which == 'norm':
        return _extend_norm(cfg, timer)
    raise ValueError("extend knows the 'starfish' and 'norm' experiments, "
                     'got %r' % which)


def cmd_compress(cfg):
    timer = _Timer()
    kernel = None
    if cfg.partitions is not None:
        paths, _ = io.read_partition_manifest(cfg.partitions)
        base = os.path.dirname(os.path.abspath(cfg.partitions))
        grid = None
        blocks = []
        for path in paths:
            if not os.path.isabs(path):
                path = os.path.join(base, path)
            g, vals, _ = io.read_samples_csv(path)
            if grid is None:
                grid = g
            elif not np.allclose(g, grid):
                raise ValueError('partition %r does not share the sample '
                                 'grid' % path)
            blocks.append(vals)
        source = cfg.partitions
    else:
        ident = cfg.family or 'nearfield'
        nf = bank.family(ident, **_family_params(cfg, ident))
        if nf.kind == 'kernel':
            kernel = nf.payload
            grid = kernel.kappa
            matrix = kernel.matrix()
        else:
            mat, has_grid = nf.sample_matrix()
            if not has_grid:
                raise ValueError('family %r has no shared sample grid'
                                 % ident)
            grid, matrix = _drop_null_imag(mat[:, 0]), mat[:, 1:]
        n_blocks = min(N_COMPRESS_BLOCKS, matrix.shape[1])
        blocks = np.array_split(matrix, n_blocks, axis=1)
        source = ident
    timer.lap('load')

    opts = _qr_options(cfg)
    workers = _resolve_workers(cfg.workers)
    model, rep = pqr_aaa(grid, blocks, opts, n_workers=workers)
    timer.lap('fit')

    full = np.hstack(blocks)
    scale = np.abs(full).max() or 1.0
    if kernel is not None:
        kv = 0.5 * (kernel.kappa[:-1] + kernel.kappa[1:])
        ref = kernel.matrix(kv)
        err = np.abs(model(kv) - ref) / scale
        val_grid = kv
    else:
        err = np.abs(model(grid) - full) / scale
        val_grid = grid
    per_point = err.max(axis=1)
    sup_err = float(err.max())
    timer.lap('validate')

    out = cfg.out
    _write_json(os.path.join(out, 'config.json'), cfg.to_dict())
    model.to_json(os.path.join(out, 'model.json'))
    _write_json(os.path.join(out, 'report.json'),
                {'source': source, 'degree': model.degree,
                 'n_columns': int(full.shape[1]),
                 'n_blocks': len(blocks),
                 'sup_validation_error': sup_err}
                | rep.to_dict())
    io.write_samples_csv(os.path.join(out, 'validation.csv'), val_grid,
                         per_point[:, None], grid_label='point',
                         value_labels=['sup_rel_error'])
    if cfg.emit_partitions:
        paths = []
        for k, block in enumerate(blocks):
            name = 'partition-%03d.csv' % k
            io.write_samples_csv(os.path.join(out, name), grid, block)
            paths.append(name)
        starts = np.cumsum([0] + [b.shape[1] for b in blocks])
        io.write_partition_manifest(
            os.path.join(out, 'partitions.json'), paths,
            bounds=[[int(a), int(b)]
                    for a, b in zip(starts[:-1], starts[1:])])
    x, xlabel = _real_axis(val_grid)
    plotting.save_error_curves(os.path.join(out, 'validation.png'), x,
                               {'sup over columns': per_point},
                               xlabel=xlabel,
                               title='%s validation' % source)
    plotting.save_residual_history(os.path.join(out, 'residual_history.png'),
                                   rep.fit.residual_history,
                                   tol=opts.tol_aaa)
    timer.lap('write')
    timer.write(os.path.join(out, 'timings.json'))
    return 0 if rep.fit.converged else 3


def cmd_bank(cfg):
    if cfg.action == 'list':
        for ident in bank.list_families():
            nf = bank.family(ident)
            print('%-12s %-10s %s' % (ident, nf.kind, nf.description))
        return 0
    if cfg.family is None:
        raise ValueError('bank sample needs --family')
    timer = _Timer()
    nf = bank.family(cfg.family, **_family_params(cfg, cfg.family))
    mat, has_grid = nf.sample_matrix(max_cols=cfg.max_cols)
    timer.lap('load')

    out = cfg.out
    _write_json(os.path.join(out, 'config.json'), cfg.to_dict())
    if has_grid:
        grid, values = mat[:, 0], mat[:, 1:]
        labels = None
    else:
        # boundary samples: angle, curve coordinates, target values
        grid, values = mat[:, 0], mat[:, 1:]
        labels = ['x', 'y', 'target']
    io.write_samples_csv(os.path.join(out, 'samples.csv'),
                         _drop_null_imag(grid), _drop_null_imag(values),
                         grid_label='point' if has_grid else 'theta',
                         value_labels=labels)
    x, xlabel = _real_axis(grid)
    show = min(values.shape[1], 6)
    curves = {'column %d' % k: np.abs(values[:, k]) for k in range(show)}
    plotting.save_error_curves(os.path.join(out, 'samples.png'), x, curves,
                               xlabel=xlabel, ylabel='|value|',
                               title=cfg.family)
    timer.lap('write')
    timer.write(os.path.join(out, 'timings.json'))
    return 0


_HANDLERS = {
    'fit': cmd_fit,
    'quad': cmd_quad,
    'tucker': cmd_tucker,
    'twostep': cmd_twostep,
    'extend': cmd_extend,
    'compress': cmd_compress,
    'bank': cmd_bank,
}


def _add_common(p):
    p.add_argument('--family', help='named sample family from the bank')
    p.add_argument('--input', help='input CSV or tensor file')
    p.add_argument('--preset', help='named experiment preset')
    p.add_argument('--tol', type=float, help='relative fit tolerance')
    p.add_argument('--tol-qr', type=float, dest='tol_qr',
                   help='rank-reveal cutoff (defaults to --tol)')
    p.add_argument('--max-degree', type=int, dest='max_degree')
    p.add_argument('--norm', choices=['2', 'inf'],
                   help='residual norm across components')
    p.add_argument('--workers', type=int,
                   help='thread count (RATKIT_THREADS overrides)')
    p.add_argument('--seed', type=int, help='seed for seeded families')
    p.add_argument('--delta', type=float,
                   help='sharpness parameter of the f2 family')
    p.add_argument('--out', default='.', help='output directory')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='ratkit',
        description='Vector-valued rational approximation toolkit.')
    sub = parser.add_subparsers(dest='subcommand', required=True)

    p = sub.add_parser('fit', help='fit one shared-support rational model')
    _add_common(p)
    p.add_argument('--engine', choices=['aaa', 'sv-aaa', 'qr-aaa'],
                   help='fitting engine (default qr-aaa)')

    p = sub.add_parser('quad', help='build a generalized quadrature rule')
    _add_common(p)
    p.add_argument('--method', choices=['gk', 'exact'],
                   help='weight computation method (default gk)')

    p = sub.add_parser('tucker', help='separable multivariate fit')
    _add_common(p)

    p = sub.add_parser('twostep', help='warm-started bivariate fit')
    _add_common(p)

    p = sub.add_parser('extend', help='function extension experiments')
    _add_common(p)
    p.add_argument('--emit-contours', action='store_true',
                   dest='emit_contours',
                   help='write error-level contour CSVs')

    p = sub.add_parser('compress', help='split/join compression of a '
                                        'large column family')
    _add_common(p)
    p.add_argument('--partitions', help='partition manifest JSON')
    p.add_argument('--emit-partitions', action='store_true',
                   dest='emit_partitions',
                   help='write per-partition CSVs and a manifest')

    p = sub.add_parser('bank', help='list or sample the family bank')
    p.add_argument('action', choices=['list', 'sample'])
    _add_common(p)
    p.add_argument('--max-cols', type=int, dest='max_cols',
                   help='cap on emitted sample columns')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    fields = {f: getattr(args, f) for f in RunConfig.__dataclass_fields__
              if hasattr(args, f)}
    try:
        cfg = RunConfig(**fields)
        _apply_preset(cfg)
        if cfg.subcommand != 'bank' or cfg.action == 'sample':
            os.makedirs(cfg.out, exist_ok=True)
        return _HANDLERS[cfg.subcommand](cfg)
    except (ValueError, KeyError, OSError) as exc:
        # KeyError's str() wraps the message in quotes
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print('error: %s' % msg, file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
