"""Figure rendering for fit reports and error fields.

Everything here draws to files through the Agg backend, so the module
is safe to import in headless runs.  Each helper builds one figure,
saves it, and closes it; nothing keeps pyplot state alive between
calls.  The contour helper is the odd one out: it uses the contouring
machinery to extract isoline vertices without saving a figure at all.
"""

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    'save_residual_history',
    'save_error_curves',
    'save_error_field',
    'save_rule',
    'extract_contours',
]


def save_residual_history(path, history, tol=None, title=None):
    """Semilogy plot of a greedy fit's residual per iteration."""
    history = np.asarray(history, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(np.arange(1, history.size + 1), history, 'o-', ms=4)
    if tol is not None:
        ax.axhline(tol, color='0.5', ls='--', lw=1.0, label='tolerance')
        ax.legend(loc='best')
    ax.set_xlabel('iteration')
    ax.set_ylabel('max residual')
    if title:
        ax.set_title(title)
    ax.grid(True, which='both', alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_error_curves(path, x, curves, xlabel='', ylabel='error',
                      logx=False, title=None):
    """Plot labeled error curves against a common abscissa, log y.

    curves maps label -> array of values aligned with x.  Zeros are
    clipped to the floor of the positive entries so log scaling never
    drops points silently.
    """
    x = np.asarray(x, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, vals in curves.items():
        vals = np.abs(np.asarray(vals, dtype=float))
        pos = vals[vals > 0.0]
        floor = pos.min() * 1e-2 if pos.size else 1e-17
        ax.plot(x, np.maximum(vals, floor), '.-', ms=4, label=label)
    ax.set_yscale('log')
    if logx:
        ax.set_xscale('log')
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if curves:
        ax.legend(loc='best', fontsize=8)
    ax.grid(True, which='both', alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_error_field(path, x, y, errors, boundary=None, floor=1e-17,
                     title=None):
    """Pseudocolor map of log10 |error| over a structured x-y grid.

    errors has shape (len(x), len(y)).  boundary, when given, is a
    pair of closed-curve coordinate arrays drawn on top.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    field = np.log10(np.maximum(np.abs(np.asarray(errors)), floor))
    if field.shape != (x.size, y.size):
        raise ValueError('error field shape %r does not match grids '
                         '(%d, %d)' % (field.shape, x.size, y.size))
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    # pcolormesh wants the field indexed (row = y, col = x)
    mesh = ax.pcolormesh(x, y, field.T, shading='nearest', cmap='viridis')
    fig.colorbar(mesh, ax=ax, label='log10 error')
    if boundary is not None:
        bx, by = boundary
        ax.plot(bx, by, 'w-', lw=1.5)
    ax.set_xlabel('x')
    ax.set_ylabel('y')
    ax.set_aspect('equal')
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_rule(path, rule, title=None):
    """Stem-style view of a quadrature rule: |weights| at the nodes."""
    nodes = np.asarray(rule.nodes, dtype=float)
    weights = np.asarray(rule.weights)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    mag = np.abs(weights)
    pos = mag[mag > 0.0]
    floor = pos.min() * 1e-2 if pos.size else 1e-17
    ax.semilogy(nodes, np.maximum(mag, floor), 'o', ms=5)
    ax.vlines(nodes, floor, np.maximum(mag, floor), lw=0.8, alpha=0.5)
    ax.set_xlabel('node')
    ax.set_ylabel('|weight|')
    if title:
        ax.set_title(title)
    ax.grid(True, which='both', alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def extract_contours(x, y, field, levels):
    """Isolines of a scalar field as vertex arrays, keyed by level.

    Returns {level: [segment, ...]} where each segment is an (n, 2)
    array of x-y vertices.  Levels absent from the field's range come
    back with empty lists rather than raising.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    field = np.asarray(field, dtype=float)
    if field.shape != (x.size, y.size):
        raise ValueError('field shape %r does not match grids (%d, %d)'
                         % (field.shape, x.size, y.size))
    levels = sorted(float(l) for l in levels)
    fig, ax = plt.subplots()
    try:
        cs = ax.contour(x, y, field.T, levels=levels)
        out = {}
        for lev, segs in zip(cs.levels, cs.allsegs):
            out[float(lev)] = [np.asarray(s, dtype=float) for s in segs]
        for lev in levels:
            out.setdefault(lev, [])
    finally:
        plt.close(fig)
    return out
