"""Binary grid format (FHL1) and CSV table helpers.

FHL1 layout, all little-endian:
    magic  b"FHL1"
    u32    rows
    u32    cols
    f64    cell_h
    f64[rows*cols]  row-major values (+inf allowed)
"""

import csv
import struct

import numpy as np

from .errors import DataError

MAGIC = b"FHL1"
_HEADER = struct.Struct("<4sIId")


def write_grid(path, values, cell_h):
    """Write a 2D float array to *path* in FHL1 format."""
    arr = np.ascontiguousarray(values, dtype="<f8")
    if arr.ndim != 2:
        raise DataError(f"FHL1 stores 2D grids, got shape {arr.shape}")
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols, float(cell_h)))
        fh.write(arr.tobytes())


def read_grid(path):
    """Read an FHL1 file; returns (values, cell_h)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise DataError(f"{path}: truncated FHL1 header")
        magic, rows, cols, cell_h = _HEADER.unpack(head)
        if magic != MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        payload = fh.read(rows * cols * 8)
    if len(payload) != rows * cols * 8:
        raise DataError(f"{path}: truncated FHL1 payload")
    values = np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()
    return values, cell_h


def write_csv(path, header, rows):
    """Write a CSV table with a header row.

    Floats are formatted with repr (shortest round-trip), which keeps
    reruns bit-identical.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Read a CSV table; returns (header, rows-of-strings)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        table = list(reader)
    if not table:
        return [], []
    return table[0], table[1:]


def write_metadata(path, pairs):
    """Write a key,value sidecar CSV (generator metadata)."""
    write_csv(path, ["key", "value"], [(k, v) for k, v in pairs])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v
