"""File exchange formats: delimited text and the flat tensor layout.

CSV is the universal exchange format; values carry 17 significant
digits so a write/read round trip is exact for doubles.  Complex
columns are stored as adjacent ``name_re``/``name_im`` pairs and the
header is what signals them.  Dense sample tensors of three or more
modes go to a flat little-endian binary file with a JSON grid manifest
next to it.
"""

from __future__ import annotations

import csv
import json
import struct

import numpy as np

from .multivariate import SampleTensor, _decode, _encode

__all__ = [
    'format_value',
    'write_samples_csv',
    'read_samples_csv',
    'write_error_field_csv',
    'save_tensor',
    'load_tensor',
    'write_partition_manifest',
    'read_partition_manifest',
]

_TENSOR_MAGIC = b'RKTENS1\x00'


def format_value(v):
    """17-significant-digit decimal text for one real number."""
    return format(float(v), '.17g')


def _expand(label, column):
    """One logical column -> list of (name, real array) pairs."""
    column = np.asarray(column)
    if np.iscomplexobj(column):
        return [(label + '_re', column.real), (label + '_im', column.imag)]
    return [(label, column.astype(float))]


def write_samples_csv(path, grid, values, grid_label='grid',
                      value_labels=None):
    """Write a grid-keyed sample table.

    The grid is the first logical column; each column of ``values``
    follows.  Complex data (grid or samples) becomes re/im column
    pairs.
    """
    grid = np.atleast_1d(np.asarray(grid))
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != len(grid):
        raise ValueError('values and grid disagree in length')
    if value_labels is None:
        value_labels = ['f%d' % j for j in range(values.shape[1])]
    if len(value_labels) != values.shape[1]:
        raise ValueError('need one label per value column')

    physical = _expand(grid_label, grid)
    for label, col in zip(value_labels, values.T):
        physical.extend(_expand(label, col))
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow([name for name, _ in physical])
        for i in range(len(grid)):
            writer.writerow([format_value(col[i]) for _, col in physical])


def _fold_header(names):
    """Group physical column names into logical (label, width) pairs.

    A ``_re`` column must be followed immediately by the matching
    ``_im`` column; anything else is a real column.
    """
    logical = []
    k = 0
    while k < len(names):
        name = names[k]
        if name.endswith('_re'):
            stem = name[:-3]
            if k + 1 >= len(names) or names[k + 1] != stem + '_im':
                raise ValueError("column '%s' lacks its '%s_im' partner"
                                 % (name, stem))
            logical.append((stem, 2))
            k += 2
        elif name.endswith('_im'):
            raise ValueError("column '%s' appears without its '_re' partner"
                             % name)
        else:
            logical.append((name, 1))
            k += 1
    return logical


def read_samples_csv(path):
    """Read a grid-keyed sample table written by write_samples_csv.

    Returns (grid, values, labels): the grid from the first logical
    column, the remaining logical columns as an (n, m) array (complex
    when any re/im pair occurs among them), and their labels.
    Malformed input raises ValueError naming the offending line.
    """
    with open(path, newline='') as fh:
        rows = list(csv.reader(fh))
    rows = [(i + 1, row) for i, row in enumerate(rows)
            if row and any(cell.strip() for cell in row)]
    if len(rows) < 2:
        raise ValueError('need a header line and at least one data row')
    header = [cell.strip() for cell in rows[0][1]]
    logical = _fold_header(header)
    if len(logical) < 2:
        raise ValueError('need a grid column and at least one sample column')
    width = len(header)

    data = np.empty((len(rows) - 1, width))
    for r, (lineno, row) in enumerate(rows[1:]):
        if len(row) != width:
            raise ValueError('line %d: expected %d fields, found %d'
                             % (lineno, width, len(row)))
        try:
            data[r] = [float(cell) for cell in row]
        except ValueError:
            raise ValueError('line %d: non-numeric field' % lineno) from None

    columns = []
    k = 0
    for _, w in logical:
        if w == 2:
            columns.append(data[:, k] + 1j * data[:, k + 1])
        else:
            columns.append(data[:, k])
        k += w
    labels = [name for name, _ in logical]
    grid = columns[0]
    if any(np.iscomplexobj(c) for c in columns[1:]):
        values = np.stack([c.astype(complex) for c in columns[1:]], axis=1)
    else:
        values = np.stack(columns[1:], axis=1)
    return grid, values, labels


def write_error_field_csv(path, x, y, errors, floor=1e-17):
    """Flatten an error field to (x, y, log10_error) rows.

    ``errors`` is indexed [i, j] against x[i], y[j]; zeros are clamped
    at the floor so the logarithm stays finite.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if errors.shape != (len(x), len(y)):
        raise ValueError('error field shape %r does not match grids (%d, %d)'
                         % (errors.shape, len(x), len(y)))
    log10 = np.log10(np.maximum(errors, floor))
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(['x', 'y', 'log10_error'])
        for i in range(len(x)):
            for j in range(len(y)):
                writer.writerow([format_value(x[i]), format_value(y[j]),
                                 format_value(log10[i, j])])


def _manifest_path(path):
    return str(path) + '.json'


def save_tensor(tensor, path):
    """Write a SampleTensor as flat binary plus a JSON grid manifest.

    Layout: 8-byte magic, int64 mode count, int64 complex flag, int64
    per-mode lengths, then the values in C order as little-endian
    doubles (interleaved re/im when complex).  The manifest lands at
    ``path + '.json'`` and carries the grids.
    """
    values = tensor.values
    is_complex = np.iscomplexobj(values)
    shape = values.shape
    with open(path, 'wb') as fh:
        fh.write(_TENSOR_MAGIC)
        fh.write(struct.pack('<q', len(shape)))
        fh.write(struct.pack('<q', int(is_complex)))
        fh.write(struct.pack('<%dq' % len(shape), *shape))
        if is_complex:
            flat = np.ascontiguousarray(values, dtype='<c16')
        else:
            flat = np.ascontiguousarray(values, dtype='<f8')
        fh.write(flat.tobytes())
    manifest = {
        'kind': 'sample_tensor',
        'scalar_field': 'complex' if is_complex else 'real',
        'shape': list(shape),
        'mode_grids': [_encode(g) for g in tensor.mode_grids],
    }
    with open(_manifest_path(path), 'w') as fh:
        json.dump(manifest, fh, sort_keys=True)
        fh.write('\n')


def load_tensor(path):
    """Read a tensor written by save_tensor (binary plus manifest)."""
    with open(path, 'rb') as fh:
        magic = fh.read(len(_TENSOR_MAGIC))
        if magic != _TENSOR_MAGIC:
            raise ValueError('not a tensor file: bad magic %r' % magic)
        d, = struct.unpack('<q', fh.read(8))
        is_complex, = struct.unpack('<q', fh.read(8))
        shape = struct.unpack('<%dq' % d, fh.read(8 * d))
        dtype = '<c16' if is_complex else '<f8'
        count = int(np.prod(shape))
        flat = np.frombuffer(fh.read(), dtype=dtype, count=count)
    with open(_manifest_path(path)) as fh:
        manifest = json.load(fh)
    if manifest.get('kind') != 'sample_tensor':
        raise ValueError('manifest is not a sample_tensor manifest')
    if list(shape) != list(manifest['shape']):
        raise ValueError('binary shape %r disagrees with manifest %r'
                         % (list(shape), manifest['shape']))
    grids = tuple(_decode(doc) for doc in manifest['mode_grids'])
    return SampleTensor(grids, flat.reshape(shape).copy())


def write_partition_manifest(path, csv_paths, bounds=None):
    """JSON manifest naming the per-partition CSV files in order."""
    doc = {'kind': 'partition_manifest',
           'partitions': [str(p) for p in csv_paths]}
    if bounds is not None:
        doc['column_bounds'] = [[int(a), int(b)] for a, b in bounds]
    with open(path, 'w') as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write('\n')


def read_partition_manifest(path):
    """Partition CSV paths (and column bounds when present)."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get('kind') != 'partition_manifest':
        raise ValueError('not a partition manifest')
    bounds = doc.get('column_bounds')
    if bounds is not None:
        bounds = [(int(a), int(b)) for a, b in bounds]
    return doc['partitions'], bounds
