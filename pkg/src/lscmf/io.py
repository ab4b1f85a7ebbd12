"""Matrix file formats: headerless CSV and the LSCMF1 little-endian binary."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import InputError

MAGIC = b"LSCMF1\x00"
_HEADER = struct.Struct("<7sxQQ")

FORMATS = ("csv", "bin")


def read_matrix(path, fmt: str | None = None) -> np.ndarray:
    """Read a 2-d float matrix from `path`; `fmt` defaults to the file suffix."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    if fmt == "csv":
        try:
            data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
        except ValueError as exc:
            raise InputError(f"{path}: not a numeric CSV matrix ({exc})") from exc
        return data
    if fmt == "bin":
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise InputError(f"{path}: file too short for an LSCMF1 header")
        magic, rows, cols = _HEADER.unpack_from(raw)
        if magic != MAGIC:
            raise InputError(f"{path}: bad magic bytes {magic!r}")
        expected = _HEADER.size + 8 * rows * cols
        if len(raw) != expected:
            raise InputError(f"{path}: expected {expected} bytes for a {rows}x{cols} matrix, got {len(raw)}")
        return np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(float)
    raise InputError(f"{path}: unknown matrix format {fmt!r}")


def write_matrix(path, matrix, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.ndim != 2:
        raise ValueError("only 2-d matrices can be written")
    if fmt == "csv":
        # repr-style formatting round-trips every double exactly
        with open(path, "w", newline="") as fh:
            for row in matrix:
                fh.write(",".join(repr(float(v)) for v in row) + "\r\n")
    elif fmt == "bin":
        rows, cols = matrix.shape
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, rows, cols))
            fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
