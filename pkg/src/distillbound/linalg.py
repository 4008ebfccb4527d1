"""Dense matrix norms and the DBM1 binary matrix format.

Matrices are plain 2-D ``float64`` numpy arrays.  One (2,1)-norm convention is
used everywhere, see :func:`norm21_of_transpose`.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConvergenceError, ParseError, ShapeError

SPECTRAL_TOL = 1e-9
SPECTRAL_MAX_ITER = 10_000

_DBM_MAGIC = b"DBM1"
_DBM_HEADER = struct.Struct("<4sII")


def as_matrix(a, name="matrix"):
    """Validate and return ``a`` as a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def frobenius_norm(a):
    return float(np.sqrt(np.sum(np.square(as_matrix(a)))))


def spectral_norm(a, tol=SPECTRAL_TOL, max_iter=SPECTRAL_MAX_ITER, seed=0):
    """Largest singular value by power iteration on ``A^T A``.

    The start vector is a random unit vector drawn from ``seed``.  Raises
    :class:`ConvergenceError` (with the last iterate in ``.last``) when the
    relative eigen-residual has not dropped below ``tol`` after ``max_iter``
    steps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = as_matrix(a)
    if a.size == 0 or not np.any(a):
        return 0.0
    # iterate on a unit-scaled copy so tiny or huge entries cannot under/overflow
    scale = float(np.max(np.abs(a)))
    a = a / scale
    rng = np.random.default_rng(seed)
    for _ in range(4):
        v0 = rng.standard_normal(a.shape[1])
        lam, v, _, converged = kernels.power_iteration(a, v0, tol, max_iter)
        if lam > 0.0:
            break
    # start vector landed in the null space four times: A is (numerically) zero
    if lam <= 0.0:
        return 0.0
    if not converged:
        raise ConvergenceError(
            f"power iteration did not reach tol={tol} in {max_iter} iterations",
            last=(float(np.sqrt(lam)) * scale, v),
        )
    return float(np.sqrt(lam)) * scale


def row_norms(w):
    return np.sqrt(np.sum(np.square(as_matrix(w)), axis=1))


def norm21_of_transpose(w):
    """``||W^T||_{2,1}``: the sum of the l2 norms of the rows of ``W``.

    With ``W`` of shape (outputs, inputs) this is the sum over output units of
    their incoming weight norms.  The matrix-cover construction (cover21) and
    the regulariser gradient both rely on this orientation.
    """
    return float(np.sum(row_norms(w)))


def stable_rank(w):
    w = as_matrix(w)
    spec = spectral_norm(w)
    if spec == 0.0:
        return 0.0
    return float(np.sum(np.square(w)) / spec**2)


@dataclass(frozen=True)
class NormProfile:
    frobenius: float
    spectral: float
    norm21: float
    stable_rank: float


def norm_profile(w):
    w = as_matrix(w)
    fro = frobenius_norm(w)
    spec = spectral_norm(w)
    sr = (fro / spec) ** 2 if spec > 0 else 0.0
    return NormProfile(fro, spec, norm21_of_transpose(w), sr)


def project_frobenius(x, radius):
    """Project ``x`` onto the Frobenius ball of the given radius (whole batch at once)."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    nrm = float(np.linalg.norm(x))
    if nrm <= radius or not np.isfinite(radius):
        return x
    return x * (radius / nrm)


def write_dbm(path, a):
    a = as_matrix(a)
    rows, cols = a.shape
    with open(path, "wb") as fh:
        fh.write(_DBM_HEADER.pack(_DBM_MAGIC, rows, cols))
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_dbm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _DBM_HEADER.size:
        raise ParseError(f"{path}: truncated DBM1 header")
    magic, rows, cols = _DBM_HEADER.unpack_from(raw)
    if magic != _DBM_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    expected = _DBM_HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise ParseError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_DBM_HEADER.size).astype(np.float64)
    return data.reshape(rows, cols)
