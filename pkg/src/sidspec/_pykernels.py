"""Pure-numpy fallback implementations of the hot kernels.

Selected at import time when the compiled extension is unavailable (see
``_backend``).  Numerically these follow the same algorithms as the
compiled kernels; reductions ignore the worker count entirely, so outputs
are trivially independent of ``workers``.  Flop counters accumulate the
same per-block amounts as the compiled kernels.

Sign conventions: rotations are generated LAPACK-style (the compact
single-scalar encoding round-trips only for that convention) and
reflectors produce ``r_kk = -sign(x0)*|x|``; both factorizations therefore
finish with a sign-normalization pass forcing a non-negative R diagonal.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import RankDeficiencyError, SingularSystemError
from .parallel import LOGICAL_PARTITIONS, partition

BACKEND_NAME = "python"

_TWO_PI = 2.0 * math.pi


def _stats(flops, barriers, alloc_bytes):
    return {"flops": int(flops), "barriers": int(barriers),
            "alloc_bytes": int(alloc_bytes)}


# ---------------------------------------------------------------------------
# QR factorizations
# ---------------------------------------------------------------------------

def mgs_qr(a: np.ndarray, workers: int = 1):
    """Modified Gram-Schmidt economy QR with rank-loss detection."""
    n_rows, n_cols = a.shape
    q = np.array(a, copy=True, order="C")
    r = np.zeros((n_cols, n_cols), dtype=a.dtype)
    eps = np.finfo(a.dtype).eps
    flops = 0
    barriers = 0
    for k in range(n_cols):
        col = q[:, k]
        norm2 = float(col @ col)
        norm = math.sqrt(norm2)
        flops += 2 * n_rows + 1
        # original column energy is preserved in R's column k
        orig2 = norm2 + float(r[:k, k].astype(np.float64) @ r[:k, k].astype(np.float64))
        flops += 2 * k + 2
        if norm2 <= eps * orig2 or norm == 0.0:
            raise RankDeficiencyError(
                f"column {k} lost its norm during orthogonalization")
        r[k, k] = norm
        q[:, k] = col / a.dtype.type(norm)
        flops += n_rows
        if k + 1 < n_cols:
            proj = q[:, k] @ q[:, k + 1:]
            r[k, k + 1:] = proj
            q[:, k + 1:] -= np.outer(q[:, k], proj)
            flops += 4 * n_rows * (n_cols - 1 - k)
            barriers += 1
    alloc = q.nbytes + r.nbytes
    return q, r, _stats(flops, barriers, alloc)


def _rot_encode(c: float, s: float) -> float:
    if c == 0.0:
        return 1.0
    if abs(s) < abs(c):
        return s
    return 1.0 / c


def _rot_decode(z: float):
    if z == 1.0:
        return 0.0, 1.0
    if abs(z) < 1.0:
        s = z
        return math.sqrt(1.0 - s * s), s
    c = 1.0 / z
    return c, math.sqrt(1.0 - c * c)


def givens_qr(a: np.ndarray, workers: int = 1):
    """Givens-rotation economy QR.

    Rotations are generated column-major, each annihilating one
    subdiagonal entry against the pivot row; the compact scalar encoding
    of every rotation is stored in the entry it zeroed, and Q is formed
    afterwards by replaying the rotations in reverse over the columns
    they can still reach.
    """
    n_rows, n_cols = a.shape
    work = np.array(a, copy=True, order="C")
    flops = 0
    for k in range(n_cols):
        width = n_cols - 1 - k
        for i in range(k + 1, n_rows):
            aa = float(work[k, k])
            b = float(work[i, k])
            h = math.sqrt(aa * aa + b * b)
            if h == 0.0:
                c, s, rr = 1.0, 0.0, 0.0
            else:
                sigma = math.copysign(1.0, aa) if abs(aa) > abs(b) \
                    else math.copysign(1.0, b)
                rr = sigma * h
                c = aa / rr
                s = b / rr
            work[k, k] = rr
            work[i, k] = _rot_encode(c, s)
            if width:
                rowk = work[k, k + 1:].copy()
                rowi = work[i, k + 1:]
                work[k, k + 1:] = c * rowk + s * rowi
                work[i, k + 1:] = c * rowi - s * rowk
            flops += 8 + 6 * width
    # replay in reverse onto the economy identity
    q = np.zeros((n_rows, n_cols), dtype=a.dtype)
    for j in range(n_cols):
        q[j, j] = 1.0
    for k in range(n_cols - 1, -1, -1):
        for i in range(n_rows - 1, k, -1):
            c, s = _rot_decode(float(work[i, k]))
            rowk = q[k, k:].copy()
            rowi = q[i, k:]
            q[k, k:] = c * rowk - s * rowi
            q[i, k:] = s * rowk + c * rowi
            flops += 3 + 6 * (n_cols - k)
    r = np.triu(work[:n_cols, :n_cols])
    flops += _fix_signs(q, r)
    alloc = work.nbytes + q.nbytes + r.nbytes
    return q, r, _stats(flops, 0, alloc)


def householder_qr(a: np.ndarray, workers: int = 1):
    """Householder economy QR with compact reflector storage.

    Reflectors are kept in the subdiagonal of the working matrix (leading
    component normalized to one and implicit); the economy Q is built by
    accumulating them from last to first over the full column block.  No
    square N-by-N matrix is ever formed.
    """
    n_rows, n_cols = a.shape
    work = np.array(a, copy=True, order="C")
    taus = np.zeros(n_cols, dtype=a.dtype)
    flops = 0
    barriers = 0
    for k in range(n_cols):
        m = n_rows - k
        x = work[k:, k]
        normx = math.sqrt(float(x @ x))
        flops += 2 * m + 1
        if normx == 0.0:
            taus[k] = 0.0
            continue
        beta = -math.copysign(normx, float(x[0]))
        v0 = float(x[0]) - beta
        work[k, k] = beta
        work[k + 1:, k] /= a.dtype.type(v0)
        taus[k] = -v0 / beta
        flops += m + 4
        if k + 1 < n_cols:
            v = work[k + 1:, k]
            block = work[k + 1:, k + 1:]
            w = work[k, k + 1:] + v @ block
            t = taus[k] * w
            work[k, k + 1:] -= t
            block -= np.outer(v, t)
            flops += (n_cols - 1 - k) * (4 * m + 2)
            barriers += 1
    q = np.zeros((n_rows, n_cols), dtype=a.dtype)
    for j in range(n_cols):
        q[j, j] = 1.0
    for k in range(n_cols - 1, -1, -1):
        m = n_rows - k
        v = work[k + 1:, k]
        w = q[k, :] + v @ q[k + 1:, :]
        t = taus[k] * w
        q[k, :] -= t
        q[k + 1:, :] -= np.outer(v, t)
        flops += n_cols * (4 * m + 2)
        barriers += 1
    r = np.triu(work[:n_cols, :n_cols])
    flops += _fix_signs(q, r)
    alloc = work.nbytes + taus.nbytes + q.nbytes + r.nbytes
    return q, r, _stats(flops, barriers, alloc)


def _fix_signs(q: np.ndarray, r: np.ndarray) -> int:
    """Force a non-negative R diagonal; returns flops spent."""
    n_rows = q.shape[0]
    n_cols = r.shape[0]
    flops = 0
    for k in range(n_cols):
        if r[k, k] < 0.0:
            r[k, k:] = -r[k, k:]
            q[:, k] = -q[:, k]
            flops += (n_cols - k) + n_rows
    return flops


# ---------------------------------------------------------------------------
# Triangular solve and pipeline reductions
# ---------------------------------------------------------------------------

def back_substitution(r: np.ndarray, rhs: np.ndarray):
    n = r.shape[0]
    eps = np.finfo(r.dtype).eps
    diag = np.abs(np.diag(r))
    thresh = math.sqrt(eps) * float(np.max(np.abs(r))) if r.size else 0.0
    if np.any(diag <= thresh):
        bad = int(np.argmax(diag <= thresh))
        raise SingularSystemError(
            f"diagonal entry {bad} of R is below the rank tolerance")
    x = np.zeros(n, dtype=r.dtype)
    for i in range(n - 1, -1, -1):
        acc = rhs[i] - r[i, i + 1:] @ x[i + 1:]
        x[i] = acc / r[i, i]
    return x, _stats(n * n, 0, x.nbytes)


def qt_dot(q: np.ndarray, s: np.ndarray, workers: int = 1):
    """Q^T s without forming intermediates."""
    out = q.T @ s
    n_rows, n_cols = q.shape
    return out, _stats(2 * n_rows * n_cols, 1, out.nbytes)


def residual_sumsq(psi: np.ndarray, theta: np.ndarray, s: np.ndarray,
                   workers: int = 1):
    """||s - psi @ theta||^2 via ordered partition partials."""
    n_rows, n_cols = psi.shape
    partials = []
    for start, stop in partition(n_rows, LOGICAL_PARTITIONS):
        e = s[start:stop] - psi[start:stop] @ theta
        partials.append(e @ e)
    acc = partials[0]
    for p in partials[1:]:
        acc = acc + p
    return float(acc), _stats(n_rows * (2 * n_cols + 2), 1, 0)


# ---------------------------------------------------------------------------
# Trig lookup and analytic PSD
# ---------------------------------------------------------------------------

def trig_eval_many(entries: np.ndarray, phases: np.ndarray, linear: bool):
    """Vectorized quarter-wave table evaluation of (cos, sin)."""
    t = entries.shape[0] - 1
    step = (math.pi / 2.0) / t
    reduced = np.mod(phases, _TWO_PI)
    idx_f = reduced / step
    if linear:
        i0 = np.floor(idx_f).astype(np.int64)
        frac = (idx_f - i0).astype(np.float64)
        c0, s0 = _fold(entries, i0, t)
        c1, s1 = _fold(entries, i0 + 1, t)
        return c0 + frac * (c1 - c0), s0 + frac * (s1 - s0)
    idx = np.rint(idx_f).astype(np.int64)
    return _fold(entries, idx, t)


def _fold(entries: np.ndarray, idx: np.ndarray, t: int):
    """Map integer quarter-wave indices to (cos, sin) by quadrant symmetry."""
    idx = np.mod(idx, 4 * t)
    quad, off = np.divmod(idx, t)
    e_off = entries[off].astype(np.float64)
    e_mir = entries[t - off].astype(np.float64)
    cos = np.choose(quad, [e_off, -e_mir, -e_off, e_mir])
    sin = np.choose(quad, [e_mir, e_off, -e_mir, -e_off])
    return cos, sin


def psd_eval(beta: np.ndarray, alpha, sigma2: float, ts_s: float,
             l_points: int, sample_rate_hz: float, entries, linear: bool,
             out_dtype, workers: int = 1):
    """Analytic PSD on the half-open grid f_i = i * fs / (2 L).

    ``alpha`` is None for the all-pole form.  Returns (psd, n_saturated).
    Near-singular denominator bins are clamped to 1e12 * sigma2.
    """
    nb = beta.shape[0]
    base = math.pi * np.arange(l_points, dtype=np.float64) / l_points
    lags = np.arange(1, nb + 1, dtype=np.float64)
    phases = np.outer(base, lags)
    if entries is None:
        cos_v, sin_v = np.cos(phases), np.sin(phases)
    else:
        cos_v, sin_v = trig_eval_many(entries, phases, linear)
    b64 = beta.astype(np.float64)
    den_re = 1.0 + cos_v @ b64
    den_im = -(sin_v @ b64)
    den = den_re * den_re + den_im * den_im
    flops = l_points * (7 * nb + 4)
    if alpha is not None and alpha.shape[0] > 0:
        a64 = alpha.astype(np.float64)
        na = alpha.shape[0] - 1
        num_re = np.full(l_points, 1.0 + a64[0])
        num_im = np.zeros(l_points)
        if na > 0:
            aph = np.outer(base, np.arange(1, na + 1, dtype=np.float64))
            if entries is None:
                ac, asn = np.cos(aph), np.sin(aph)
            else:
                ac, asn = trig_eval_many(entries, aph, linear)
            num_re += ac @ a64[1:]
            num_im -= asn @ a64[1:]
        num = num_re * num_re + num_im * num_im
        flops += l_points * (7 * na + 5)
    else:
        num = None
    ceiling = 1e12 * sigma2
    sat = den < 1e-12
    n_sat = int(np.count_nonzero(sat))
    den_safe = np.where(sat, 1.0, den)
    psd = sigma2 / den_safe if num is None else sigma2 * num / den_safe
    psd = np.where(sat, ceiling, psd)
    return psd.astype(out_dtype), n_sat, _stats(flops, 1, psd.nbytes)
