"""Matrix file formats.

Two interchange formats for symmetric matrices:

* CSV: one row per line, comma-separated, no header.
* Binary: an 8-byte prefix of two little-endian uint32 (rows, cols),
  followed by row-major little-endian float64 payload.

Both readers validate symmetry before returning.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import NotSymmetric

_DIMS = struct.Struct("<II")


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    matrix = np.atleast_2d(np.loadtxt(path, delimiter=","))
    _validate(matrix)
    return matrix


def write_matrix_binary(path, matrix: np.ndarray) -> None:
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_DIMS.pack(*matrix.shape))
        fh.write(matrix.tobytes())


def read_matrix_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        rows, cols = _DIMS.unpack(fh.read(_DIMS.size))
        payload = np.frombuffer(fh.read(), dtype="<f8")
    if payload.size != rows * cols:
        raise ValueError(
            f"binary payload has {payload.size} values, expected {rows * cols}")
    matrix = payload.reshape(rows, cols).astype(float)
    _validate(matrix)
    return matrix


def _validate(matrix: np.ndarray) -> None:
    if matrix.shape[0] != matrix.shape[1]:
        raise NotSymmetric(f"expected square matrix, got shape {matrix.shape}")
    if np.max(np.abs(matrix - matrix.T)) > 1e-10:
        raise NotSymmetric("matrix read from file is not symmetric")
