# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: QR factorizations, triangular solve, pipeline
reductions, trig-table evaluation, and the analytic PSD.

Parallel loops always iterate over a fixed number of logical partitions
(or over independent columns / bins with disjoint writes); scalar
reductions are combined sequentially in ascending partition order.  The
worker count therefore only decides how many OpenMP threads execute the
partitions, never the arithmetic, so results are bitwise identical for
any ``workers``.

Sign conventions match ``_pykernels``: rotations use the LAPACK-style
single-scalar compact encoding, reflectors are stored in the subdiagonal
with implicit unit leading component, and both finish by flipping signs
so the R diagonal is non-negative.
"""

import numpy as np

cimport cython
from cython.parallel import prange
from libc.math cimport cos, fabs, floor, fmod, llround, sin, sqrt

from .errors import RankDeficiencyError, SingularSystemError

BACKEND_NAME = "cython"

ctypedef fused real_t:
    float
    double

cdef int NPART = 8          # fixed logical partition count
cdef double TWO_PI = 6.283185307179586476925287
cdef double HALF_PI = 1.570796326794896619231322


def _stats(flops, barriers, alloc_bytes):
    return {"flops": int(flops), "barriers": int(barriers),
            "alloc_bytes": int(alloc_bytes)}


# ---------------------------------------------------------------------------
# Modified Gram-Schmidt
# ---------------------------------------------------------------------------
# The factorization kernels work on the transposed matrix so that each
# column of the input occupies a contiguous row: sequential memory access
# in the inner loops, and no false sharing between threads updating
# neighbouring columns.

cdef Py_ssize_t _mgs(real_t[:, ::1] qt, real_t[:, ::1] r, int workers,
                     long long* flops, long long* barriers) noexcept nogil:
    cdef Py_ssize_t n_cols = qt.shape[0], n_rows = qt.shape[1]
    cdef Py_ssize_t i, j, k
    cdef real_t norm2, norm, proj, inv
    cdef double orig2, eps
    eps = 1.19209289550781e-07 if real_t is float else 2.22044604925031e-16
    for k in range(n_cols):
        norm2 = 0
        for i in range(n_rows):
            norm2 = norm2 + qt[k, i] * qt[k, i]
        norm = <real_t>sqrt(<double>norm2)
        flops[0] += 2 * n_rows + 1
        orig2 = <double>norm2
        for j in range(k):
            orig2 += <double>r[j, k] * <double>r[j, k]
        flops[0] += 2 * k + 2
        if norm == 0 or <double>norm2 <= eps * orig2:
            return k
        r[k, k] = norm
        inv = <real_t>(1.0 / <double>norm)
        for i in range(n_rows):
            qt[k, i] = qt[k, i] * inv
        flops[0] += n_rows
        if k + 1 < n_cols:
            if workers > 1:
                for j in prange(k + 1, n_cols, num_threads=workers,
                                schedule='static'):
                    proj = _row_dot(qt, k, j, n_rows)
                    r[k, j] = proj
                    _row_axpy(qt, k, j, -proj, n_rows)
            else:
                for j in range(k + 1, n_cols):
                    proj = _row_dot(qt, k, j, n_rows)
                    r[k, j] = proj
                    _row_axpy(qt, k, j, -proj, n_rows)
            flops[0] += 4 * n_rows * (n_cols - 1 - k)
            barriers[0] += 1
    return -1


cdef inline real_t _row_dot(real_t[:, ::1] a, Py_ssize_t src, Py_ssize_t dst,
                            Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef real_t acc = 0
    for i in range(n):
        acc = acc + a[src, i] * a[dst, i]
    return acc


cdef inline void _row_axpy(real_t[:, ::1] a, Py_ssize_t src, Py_ssize_t dst,
                           real_t coef, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        a[dst, i] = a[dst, i] + coef * a[src, i]


# ---------------------------------------------------------------------------
# Givens rotations
# ---------------------------------------------------------------------------

cdef inline double _rot_encode(double c, double s) noexcept nogil:
    if c == 0.0:
        return 1.0
    if fabs(s) < fabs(c):
        return s
    return 1.0 / c


cdef inline void _rot_decode(double z, double* c, double* s) noexcept nogil:
    if z == 1.0:
        c[0] = 0.0
        s[0] = 1.0
    elif fabs(z) < 1.0:
        s[0] = z
        c[0] = sqrt(1.0 - z * z)
    else:
        c[0] = 1.0 / z
        s[0] = sqrt(1.0 - c[0] * c[0])


cdef void _givens(real_t[:, ::1] work, real_t[:, ::1] q,
                  long long* flops) noexcept nogil:
    cdef Py_ssize_t n_rows = work.shape[0], n_cols = work.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double aa, b, h, sigma, rr, c, s
    cdef real_t tk, ti
    for k in range(n_cols):
        for i in range(k + 1, n_rows):
            aa = <double>work[k, k]
            b = <double>work[i, k]
            h = sqrt(aa * aa + b * b)
            if h == 0.0:
                c = 1.0
                s = 0.0
                rr = 0.0
            else:
                if fabs(aa) > fabs(b):
                    sigma = 1.0 if aa >= 0.0 else -1.0
                else:
                    sigma = 1.0 if b >= 0.0 else -1.0
                rr = sigma * h
                c = aa / rr
                s = b / rr
            work[k, k] = <real_t>rr
            work[i, k] = <real_t>_rot_encode(c, s)
            for j in range(k + 1, n_cols):
                tk = work[k, j]
                ti = work[i, j]
                work[k, j] = <real_t>(c * <double>tk + s * <double>ti)
                work[i, j] = <real_t>(c * <double>ti - s * <double>tk)
            flops[0] += 8 + 6 * (n_cols - 1 - k)
    # replay the stored rotations in reverse onto the economy identity
    for j in range(n_cols):
        q[j, j] = 1
    for k in range(n_cols - 1, -1, -1):
        for i in range(n_rows - 1, k, -1):
            _rot_decode(<double>work[i, k], &c, &s)
            for j in range(k, n_cols):
                tk = q[k, j]
                ti = q[i, j]
                q[k, j] = <real_t>(c * <double>tk - s * <double>ti)
                q[i, j] = <real_t>(s * <double>tk + c * <double>ti)
            flops[0] += 3 + 6 * (n_cols - k)


# ---------------------------------------------------------------------------
# Householder reflections
# ---------------------------------------------------------------------------

cdef void _householder(real_t[:, ::1] wt, real_t[::1] taus,
                       real_t[:, ::1] qt, int workers,
                       long long* flops, long long* barriers) noexcept nogil:
    # wt and qt are transposed (one input column per contiguous row)
    cdef Py_ssize_t n_cols = wt.shape[0], n_rows = wt.shape[1]
    cdef Py_ssize_t i, j, k, m
    cdef real_t norm2
    cdef double normx, beta, v0, x0
    for k in range(n_cols):
        m = n_rows - k
        norm2 = 0
        for i in range(k, n_rows):
            norm2 = norm2 + wt[k, i] * wt[k, i]
        normx = sqrt(<double>norm2)
        flops[0] += 2 * m + 1
        if normx == 0.0:
            taus[k] = 0
            continue
        x0 = <double>wt[k, k]
        beta = -normx if x0 >= 0.0 else normx
        v0 = x0 - beta
        wt[k, k] = <real_t>beta
        for i in range(k + 1, n_rows):
            wt[k, i] = <real_t>(<double>wt[k, i] / v0)
        taus[k] = <real_t>(-v0 / beta)
        flops[0] += m + 4
        if k + 1 < n_cols:
            if workers > 1:
                for j in prange(k + 1, n_cols, num_threads=workers,
                                schedule='static'):
                    _reflect_row(wt, wt, taus[k], k, j, n_rows)
            else:
                for j in range(k + 1, n_cols):
                    _reflect_row(wt, wt, taus[k], k, j, n_rows)
            flops[0] += (n_cols - 1 - k) * (4 * m + 2)
            barriers[0] += 1
    for j in range(n_cols):
        qt[j, j] = 1
    for k in range(n_cols - 1, -1, -1):
        m = n_rows - k
        if workers > 1:
            for j in prange(0, n_cols, num_threads=workers,
                            schedule='static'):
                _reflect_row(wt, qt, taus[k], k, j, n_rows)
        else:
            for j in range(n_cols):
                _reflect_row(wt, qt, taus[k], k, j, n_rows)
        flops[0] += n_cols * (4 * m + 2)
        barriers[0] += 1


cdef inline void _reflect_row(real_t[:, ::1] vsrc, real_t[:, ::1] at,
                              real_t tau, Py_ssize_t k, Py_ssize_t j,
                              Py_ssize_t n_rows) noexcept nogil:
    # applies (I - tau v v^T) to transposed-row j of `at` over positions
    # k.., where v lives in vsrc[k, k+1:] with implicit leading 1
    cdef Py_ssize_t i
    cdef real_t w = at[j, k]
    for i in range(k + 1, n_rows):
        w = w + vsrc[k, i] * at[j, i]
    w = w * tau
    at[j, k] = at[j, k] - w
    for i in range(k + 1, n_rows):
        at[j, i] = at[j, i] - w * vsrc[k, i]


cdef long long _fix_signs(real_t[:, ::1] q, real_t[:, ::1] r) noexcept nogil:
    cdef Py_ssize_t n_rows = q.shape[0], n_cols = r.shape[0]
    cdef Py_ssize_t i, k
    cdef long long flops = 0
    for k in range(n_cols):
        if r[k, k] < 0:
            for i in range(k, n_cols):
                r[k, i] = -r[k, i]
            for i in range(n_rows):
                q[i, k] = -q[i, k]
            flops += (n_cols - k) + n_rows
    return flops


cdef long long _fix_signs_t(real_t[:, ::1] qt, real_t[:, ::1] r) noexcept nogil:
    # variant for the transposed layout (Q columns stored as rows)
    cdef Py_ssize_t n_cols = r.shape[0], n_rows = qt.shape[1]
    cdef Py_ssize_t i, k
    cdef long long flops = 0
    for k in range(n_cols):
        if r[k, k] < 0:
            for i in range(k, n_cols):
                r[k, i] = -r[k, i]
            for i in range(n_rows):
                qt[k, i] = -qt[k, i]
            flops += (n_cols - k) + n_rows
    return flops


# ---------------------------------------------------------------------------
# Triangular solve and reductions
# ---------------------------------------------------------------------------

cdef void _back_sub(real_t[:, ::1] r, real_t[::1] rhs,
                    real_t[::1] x) noexcept nogil:
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t i, j
    cdef real_t acc
    for i in range(n - 1, -1, -1):
        acc = rhs[i]
        for j in range(i + 1, n):
            acc = acc - r[i, j] * x[j]
        x[i] = acc / r[i, i]


cdef void _qt_dot(real_t[:, ::1] q, real_t[::1] s, real_t[::1] out,
                  int workers) noexcept nogil:
    cdef Py_ssize_t n_rows = q.shape[0], n_cols = q.shape[1]
    cdef Py_ssize_t i, j
    cdef real_t acc
    for j in prange(n_cols, num_threads=workers, schedule='static'):
        acc = 0
        for i in range(n_rows):
            acc = acc + q[i, j] * s[i]
        out[j] = acc


cdef real_t _residual_ssq(real_t[:, ::1] psi, real_t[::1] theta,
                          real_t[::1] s, int workers) noexcept nogil:
    cdef Py_ssize_t n_rows = psi.shape[0], n_cols = psi.shape[1]
    cdef real_t[8] partials
    cdef Py_ssize_t i, j, start, stop
    cdef Py_ssize_t base = n_rows // NPART, rem = n_rows % NPART
    cdef int p
    cdef real_t acc, e
    for p in prange(NPART, num_threads=workers, schedule='static'):
        start = p * base + (p if p < rem else rem)
        stop = start + base + (1 if p < rem else 0)
        acc = 0
        for i in range(start, stop):
            e = s[i]
            for j in range(n_cols):
                e = e - psi[i, j] * theta[j]
            acc = acc + e * e
        partials[p] = acc
    acc = partials[0]
    for p in range(1, NPART):
        acc = acc + partials[p]
    return acc


# ---------------------------------------------------------------------------
# Quarter-wave trig table and analytic PSD
# ---------------------------------------------------------------------------

cdef inline void _fold_int(const float[::1] e, Py_ssize_t t, Py_ssize_t idx,
                           double* co, double* si) noexcept nogil:
    cdef Py_ssize_t quad, off
    idx = idx % (4 * t)
    if idx < 0:
        idx += 4 * t
    quad = idx // t
    off = idx - quad * t
    if quad == 0:
        co[0] = e[off]
        si[0] = e[t - off]
    elif quad == 1:
        co[0] = -<double>e[t - off]
        si[0] = e[off]
    elif quad == 2:
        co[0] = -<double>e[off]
        si[0] = -<double>e[t - off]
    else:
        co[0] = e[t - off]
        si[0] = -<double>e[off]


cdef inline void _table_eval(const float[::1] e, Py_ssize_t t, double phase,
                             bint linear, double* co, double* si) noexcept nogil:
    cdef double step = HALF_PI / t
    cdef double red = fmod(phase, TWO_PI)
    cdef double idx_f, frac, c0, s0, c1, s1
    cdef Py_ssize_t i0
    if red < 0.0:
        red += TWO_PI
    idx_f = red / step
    if linear:
        i0 = <Py_ssize_t>floor(idx_f)
        frac = idx_f - i0
        _fold_int(e, t, i0, &c0, &s0)
        _fold_int(e, t, i0 + 1, &c1, &s1)
        co[0] = c0 + frac * (c1 - c0)
        si[0] = s0 + frac * (s1 - s0)
    else:
        _fold_int(e, t, llround(idx_f), co, si)


cdef void _psd_core(real_t[::1] out, const double[::1] beta,
                    const double[::1] alpha, bint has_ma, double sigma2,
                    const float[::1] table, bint use_table, bint linear,
                    int workers, long long* n_sat) noexcept nogil:
    cdef Py_ssize_t l_points = out.shape[0]
    cdef Py_ssize_t nb = beta.shape[0]
    cdef Py_ssize_t na = alpha.shape[0] - 1 if has_ma else 0
    cdef Py_ssize_t tres = table.shape[0] - 1 if use_table else 0
    cdef long long[8] sat
    cdef Py_ssize_t b, j, start, stop
    cdef Py_ssize_t pbase = l_points // NPART, prem = l_points % NPART
    cdef int p
    cdef double base, den_re, den_im, num_re, num_im, co, si, den, num, val
    for p in prange(NPART, num_threads=workers, schedule='static'):
        start = p * pbase + (p if p < prem else prem)
        stop = start + pbase + (1 if p < prem else 0)
        sat[p] = 0
        for b in range(start, stop):
            base = (3.14159265358979323846 * b) / l_points
            den_re = 1.0
            den_im = 0.0
            for j in range(nb):
                if use_table:
                    _table_eval(table, tres, base * (j + 1), linear, &co, &si)
                else:
                    co = cos(base * (j + 1))
                    si = sin(base * (j + 1))
                den_re = den_re + beta[j] * co
                den_im = den_im - beta[j] * si
            den = den_re * den_re + den_im * den_im
            if has_ma:
                num_re = 1.0 + alpha[0]
                num_im = 0.0
                for j in range(1, na + 1):
                    if use_table:
                        _table_eval(table, tres, base * j, linear, &co, &si)
                    else:
                        co = cos(base * j)
                        si = sin(base * j)
                    num_re = num_re + alpha[j] * co
                    num_im = num_im - alpha[j] * si
                num = num_re * num_re + num_im * num_im
            else:
                num = 1.0
            if den < 1e-12:
                sat[p] = sat[p] + 1
                val = 1e12 * sigma2
            else:
                val = sigma2 * num / den
            out[b] = <real_t>val
    n_sat[0] = 0
    for p in range(NPART):
        n_sat[0] += sat[p]


cdef void _trig_many(const float[::1] e, const double[::1] phases,
                     bint linear, double[::1] cos_out, double[::1] sin_out,
                     int workers) noexcept nogil:
    cdef Py_ssize_t n = phases.shape[0]
    cdef Py_ssize_t t = e.shape[0] - 1
    cdef Py_ssize_t i, start, stop
    cdef Py_ssize_t base = n // NPART, rem = n % NPART
    cdef int p
    cdef double co, si
    for p in prange(NPART, num_threads=workers, schedule='static'):
        start = p * base + (p if p < rem else rem)
        stop = start + base + (1 if p < rem else 0)
        co = 0.0
        si = 0.0
        for i in range(start, stop):
            _table_eval(e, t, phases[i], linear, &co, &si)
            cos_out[i] = co
            sin_out[i] = si


# ---------------------------------------------------------------------------
# Python-visible wrappers (same interface as _pykernels)
# ---------------------------------------------------------------------------

def mgs_qr(a, int workers=1):
    qt = np.ascontiguousarray(a.T)
    n_cols = a.shape[1]
    r = np.zeros((n_cols, n_cols), dtype=a.dtype)
    cdef long long flops = 0, barriers = 0
    cdef Py_ssize_t bad
    cdef float[:, ::1] qf, rf
    cdef double[:, ::1] qd, rd
    if a.dtype == np.float32:
        qf = qt
        rf = r
        bad = _mgs[float](qf, rf, workers, &flops, &barriers)
    else:
        qd = qt
        rd = r
        bad = _mgs[double](qd, rd, workers, &flops, &barriers)
    if bad >= 0:
        raise RankDeficiencyError(
            f"column {bad} lost its norm during orthogonalization")
    q = np.ascontiguousarray(qt.T)
    return q, r, _stats(flops, barriers, qt.nbytes + q.nbytes + r.nbytes)


def givens_qr(a, int workers=1):
    work = np.array(a, copy=True, order="C")
    n_rows, n_cols = a.shape
    q = np.zeros((n_rows, n_cols), dtype=a.dtype)
    cdef long long flops = 0
    cdef float[:, ::1] wf, qf, rf
    cdef double[:, ::1] wd, qd, rd
    if a.dtype == np.float32:
        wf = work
        qf = q
        _givens[float](wf, qf, &flops)
    else:
        wd = work
        qd = q
        _givens[double](wd, qd, &flops)
    r = np.triu(work[:n_cols, :n_cols])
    if a.dtype == np.float32:
        rf = r
        flops += _fix_signs[float](qf, rf)
    else:
        rd = r
        flops += _fix_signs[double](qd, rd)
    return q, r, _stats(flops, 0, work.nbytes + q.nbytes + r.nbytes)


def householder_qr(a, int workers=1):
    wt = np.ascontiguousarray(a.T)
    n_rows, n_cols = a.shape
    qt = np.zeros((n_cols, n_rows), dtype=a.dtype)
    taus = np.zeros(n_cols, dtype=a.dtype)
    cdef long long flops = 0, barriers = 0
    cdef float[:, ::1] wf, qf, rf
    cdef float[::1] tf
    cdef double[:, ::1] wd, qd, rd
    cdef double[::1] td
    if a.dtype == np.float32:
        wf = wt
        qf = qt
        tf = taus
        _householder[float](wf, tf, qf, workers, &flops, &barriers)
    else:
        wd = wt
        qd = qt
        td = taus
        _householder[double](wd, td, qd, workers, &flops, &barriers)
    r = np.triu(np.ascontiguousarray(wt[:, :n_cols].T))
    if a.dtype == np.float32:
        rf = r
        flops += _fix_signs_t[float](qf, rf)
    else:
        rd = r
        flops += _fix_signs_t[double](qd, rd)
    q = np.ascontiguousarray(qt.T)
    alloc = wt.nbytes + taus.nbytes + qt.nbytes + q.nbytes + r.nbytes
    return q, r, _stats(flops, barriers, alloc)


def back_substitution(r, rhs):
    n = r.shape[0]
    eps = np.finfo(r.dtype).eps
    diag = np.abs(np.diag(r))
    thresh = np.sqrt(eps) * float(np.max(np.abs(r))) if r.size else 0.0
    if np.any(diag <= thresh):
        bad = int(np.argmax(diag <= thresh))
        raise SingularSystemError(
            f"diagonal entry {bad} of R is below the rank tolerance")
    x = np.zeros(n, dtype=r.dtype)
    cdef float[:, ::1] rf
    cdef float[::1] bf, xf
    cdef double[:, ::1] rd
    cdef double[::1] bd, xd
    if r.dtype == np.float32:
        rf = r
        bf = rhs
        xf = x
        _back_sub[float](rf, bf, xf)
    else:
        rd = r
        bd = rhs
        xd = x
        _back_sub[double](rd, bd, xd)
    return x, _stats(n * n, 0, x.nbytes)


def qt_dot(q, s, int workers=1):
    n_rows, n_cols = q.shape
    out = np.zeros(n_cols, dtype=q.dtype)
    cdef float[:, ::1] qf
    cdef float[::1] sf, of
    cdef double[:, ::1] qd
    cdef double[::1] sd, od
    if q.dtype == np.float32:
        qf = q
        sf = s
        of = out
        _qt_dot[float](qf, sf, of, workers)
    else:
        qd = q
        sd = s
        od = out
        _qt_dot[double](qd, sd, od, workers)
    return out, _stats(2 * n_rows * n_cols, 1, out.nbytes)


def residual_sumsq(psi, theta, s, int workers=1):
    n_rows, n_cols = psi.shape
    cdef float[:, ::1] pf
    cdef float[::1] tf, sf
    cdef double[:, ::1] pd
    cdef double[::1] td, sd
    if psi.dtype == np.float32:
        pf = psi
        tf = theta
        sf = s
        val = float(_residual_ssq[float](pf, tf, sf, workers))
    else:
        pd = psi
        td = theta
        sd = s
        val = float(_residual_ssq[double](pd, td, sd, workers))
    return val, _stats(n_rows * (2 * n_cols + 2), 1, 0)


def trig_eval_many(entries, phases, linear, int workers=1):
    phases = np.ascontiguousarray(phases, dtype=np.float64)
    flat = phases.ravel()
    cos_out = np.empty(flat.shape[0], dtype=np.float64)
    sin_out = np.empty(flat.shape[0], dtype=np.float64)
    cdef const float[::1] ev = entries
    cdef const double[::1] pv = flat
    cdef double[::1] cv = cos_out
    cdef double[::1] sv = sin_out
    _trig_many(ev, pv, bool(linear), cv, sv, workers)
    return cos_out.reshape(phases.shape), sin_out.reshape(phases.shape)


def psd_eval(beta, alpha, sigma2, ts_s, l_points, sample_rate_hz, entries,
             linear, out_dtype, int workers=1):
    beta64 = np.ascontiguousarray(beta, dtype=np.float64)
    has_ma = alpha is not None and alpha.shape[0] > 0
    alpha64 = np.ascontiguousarray(alpha, dtype=np.float64) if has_ma \
        else np.zeros(1)
    use_table = entries is not None
    table = entries if use_table else np.zeros(2, dtype=np.float32)
    out = np.empty(l_points, dtype=out_dtype)
    cdef long long n_sat = 0
    cdef const double[::1] bv = beta64
    cdef const double[::1] av = alpha64
    cdef const float[::1] tv = table
    cdef float[::1] outf
    cdef double[::1] outd
    if np.dtype(out_dtype) == np.float32:
        outf = out
        _psd_core[float](outf, bv, av, bool(has_ma), float(sigma2), tv,
                         bool(use_table), bool(linear), workers, &n_sat)
    else:
        outd = out
        _psd_core[double](outd, bv, av, bool(has_ma), float(sigma2), tv,
                          bool(use_table), bool(linear), workers, &n_sat)
    nb = beta64.shape[0]
    na = alpha64.shape[0] - 1 if has_ma else 0
    flops = l_points * (7 * nb + 4) + (l_points * (7 * na + 5) if has_ma else 0)
    return out, int(n_sat), _stats(flops, 1, out.nbytes)
