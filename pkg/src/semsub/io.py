"""Matrix files and flat key=value configuration files.

Binary layout (little-endian throughout)::

    offset 0   b"UFMX"
    offset 4   version byte 0x01
    offset 5   rows, uint64
    offset 13  cols, uint64
    offset 21  rows * cols float64 values, row-major

The text alternative is plain CSV with one matrix row per line, no header,
each value written as its shortest round-tripping decimal.
"""
import struct
from pathlib import Path

import numpy as np

from .errors import MatrixFormatError

MAGIC = b"UFMX"
VERSION = 1
_HEADER = struct.Struct("<4sBQQ")
FORMATS = ("ufmx", "csv")


def format_for(path, fmt=None):
    """Explicit ``fmt`` wins; otherwise a ``.csv`` suffix selects CSV."""
    if fmt is not None:
        if fmt not in FORMATS:
            raise ValueError(f"unknown matrix format {fmt!r}; expected one of {FORMATS}")
        return fmt
    return "csv" if Path(path).suffix.lower() == ".csv" else "ufmx"


def encode_ufmx(a):
    a = np.ascontiguousarray(a, dtype="<f8")
    if a.ndim != 2:
        raise ValueError(f"only 2-D matrices can be stored, got shape {a.shape}")
    return _HEADER.pack(MAGIC, VERSION, a.shape[0], a.shape[1]) + a.tobytes(order="C")


def decode_ufmx(data, path="<bytes>"):
    if len(data) < 4 or data[:4] != MAGIC:
        raise MatrixFormatError(path, 0, "bad magic bytes, expected b'UFMX'")
    if len(data) < _HEADER.size:
        raise MatrixFormatError(path, len(data), "truncated header")
    _, version, rows, cols = _HEADER.unpack_from(data)
    if version != VERSION:
        raise MatrixFormatError(path, 4, f"unsupported version {version}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise MatrixFormatError(
            path, min(len(data), expected), f"payload holds {len(data) - _HEADER.size} bytes, "
            f"header promises {rows}x{cols} values ({expected - _HEADER.size} bytes)"
        )
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size, count=rows * cols)
    return values.astype(np.float64).reshape(rows, cols)


def encode_csv(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"only 2-D matrices can be stored, got shape {a.shape}")
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in a)


def decode_csv(text, path="<text>"):
    rows = []
    offset = 0
    width = None
    for line in text.splitlines(keepends=True):
        body = line.rstrip("\r\n")
        if body.strip():
            try:
                row = [float(tok) for tok in body.split(",")]
            except ValueError:
                raise MatrixFormatError(path, offset, f"non-numeric field in {body[:40]!r}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise MatrixFormatError(path, offset, f"row has {len(row)} fields, expected {width}")
            rows.append(row)
        offset += len(line.encode("utf-8"))
    if not rows:
        raise MatrixFormatError(path, 0, "no data rows")
    return np.array(rows, dtype=np.float64)


def write_matrix(path, a, fmt=None):
    path = Path(path)
    if format_for(path, fmt) == "csv":
        path.write_text(encode_csv(a))
    else:
        path.write_bytes(encode_ufmx(a))


def read_matrix(path, fmt=None):
    """Load a matrix; the magic bytes are checked for anything not CSV."""
    path = Path(path)
    if format_for(path, fmt) == "csv":
        return decode_csv(path.read_text(), str(path))
    return decode_ufmx(path.read_bytes(), str(path))


def parse_key_values(text, path="<config>"):
    """``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"{path}:{lineno}: empty key")
        out[key] = value
    return out


def format_key_values(pairs):
    return "".join(f"{k}={v}\n" for k, v in pairs.items())
