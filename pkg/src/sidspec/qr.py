"""Economy-size QR factorization by Givens rotations, modified
Gram-Schmidt, or Householder reflections, plus backward substitution.

All three methods force a non-negative R diagonal so that factors are
comparable entrywise across methods.  Every kernel exists for float32 and
float64; the precision is taken from the input dtype.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import DimensionError, NonFiniteError
from .parallel import ExecContext
from .qrmethod import Precision, QrMethod


@dataclass(eq=False)
class QrFactors:
    q_mat: np.ndarray
    r_mat: np.ndarray
    method: QrMethod
    precision: Precision
    stats: dict = field(default_factory=dict)


def _check_input(a: np.ndarray) -> np.ndarray:
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={a.ndim}")
    n_rows, n_cols = a.shape
    if n_rows < n_cols or n_cols < 1:
        raise DimensionError(f"need N >= Np >= 1, got {n_rows}x{n_cols}")
    if a.dtype not in (np.float32, np.float64):
        a = np.asarray(a, dtype=np.float64)
    if not np.isfinite(a).all():
        raise NonFiniteError("matrix contains non-finite entries")
    return np.ascontiguousarray(a)


def _workers(ctx: ExecContext | None) -> int:
    return 1 if ctx is None else ctx.worker_count


def _factorize(a: np.ndarray, method: QrMethod, kernel, ctx) -> QrFactors:
    a = _check_input(a)
    q, r, stats = kernel(a, _workers(ctx))
    if ctx is not None:
        ctx.stats.add(flops=stats["flops"], barriers=stats["barriers"])
    return QrFactors(q_mat=q, r_mat=r, method=method,
                     precision=Precision.of_dtype(a.dtype), stats=stats)


def givens_qr(a: np.ndarray, ctx: ExecContext | None = None) -> QrFactors:
    """QR via plane rotations annihilating subdiagonal entries column-major.

    The rotation sequence is inherently sequential; this kernel runs
    single-threaded regardless of the context.
    """
    return _factorize(a, QrMethod.GIVENS, kernels.givens_qr, ctx)


def gram_schmidt_qr(a: np.ndarray, ctx: ExecContext | None = None) -> QrFactors:
    """QR via modified Gram-Schmidt projections.

    Raises :class:`RankDeficiencyError` when a column's post-projection
    norm falls below sqrt(eps) times its original norm, since loss of
    orthogonality here is otherwise silent.
    """
    return _factorize(a, QrMethod.GRAM_SCHMIDT, kernels.mgs_qr, ctx)


def householder_qr(a: np.ndarray, ctx: ExecContext | None = None) -> QrFactors:
    """QR via Householder reflections with compact reflector storage.

    Reflectors are kept in the subdiagonal of the working matrix and the
    economy Q is formed afterwards by accumulating them from last to
    first; no square N-by-N matrix is materialized.
    """
    return _factorize(a, QrMethod.HOUSEHOLDER, kernels.householder_qr, ctx)


_DISPATCH = {
    QrMethod.GIVENS: givens_qr,
    QrMethod.GRAM_SCHMIDT: gram_schmidt_qr,
    QrMethod.HOUSEHOLDER: householder_qr,
}


def factorize(a: np.ndarray, method: QrMethod,
              ctx: ExecContext | None = None) -> QrFactors:
    return _DISPATCH[method](a, ctx)


def back_substitution(r_mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve R x = rhs for upper-triangular R.

    Raises :class:`SingularSystemError` when a diagonal entry is below
    the scaled rank tolerance.
    """
    r_mat = np.ascontiguousarray(r_mat)
    if r_mat.ndim != 2 or r_mat.shape[0] != r_mat.shape[1]:
        raise DimensionError("R must be square")
    if rhs.shape != (r_mat.shape[0],):
        raise DimensionError("rhs length must match R")
    rhs = np.ascontiguousarray(rhs, dtype=r_mat.dtype)
    x, _ = kernels.back_substitution(r_mat, rhs)
    return x
