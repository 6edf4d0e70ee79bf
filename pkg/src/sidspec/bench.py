"""Benchmark harness: per-component wall clock and flop counts across
problem sizes, thread counts, and kernel backends.

Components mirror the processing pipeline: regression build, the three
QR factorizations, the Q^T S update, the noise-variance reduction, and
the analytic PSD.  The compiled and pure-python backends can be timed
side by side.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from ._backend import available_backends, get_backend
from .model import ModelKind, ModelSpec, build_ar_regression
from .oracle import gen_ar_process
from .qrmethod import Precision, QrMethod
from .spectrum import DEFAULT_L_POINTS

SIZES = {
    "light": (200, 8),
    "medium": (480, 16),
    "heavy": (2520, 56),
}

_METHOD_KERNELS = {
    QrMethod.GRAM_SCHMIDT: "mgs_qr",
    QrMethod.GIVENS: "givens_qr",
    QrMethod.HOUSEHOLDER: "householder_qr",
}


@dataclass(frozen=True)
class BenchRow:
    component: str
    method: str
    size: str
    n: int
    np_cols: int
    threads: int
    backend: str
    wall_ns: int
    flops: int

    def as_dict(self) -> dict:
        return asdict(self)


def _time_best(fn, repeats: int) -> int:
    best = None
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        fn()
        dt = time.perf_counter_ns() - t0
        best = dt if best is None else min(best, dt)
    return best


def _problem(size: str, precision: Precision, seed: int = 11):
    n, np_cols = SIZES[size]
    ts = gen_ar_process([-1.2, 0.5], 1.0, n + 2 * np_cols + 8, seed)
    spec = ModelSpec(kind=ModelKind.AR, q=np_cols - 1, n_rows=n)
    return build_ar_regression(ts, spec, dtype=precision.dtype)


def run_benchmark(sizes=("medium",), methods=(QrMethod.GRAM_SCHMIDT,),
                  threads=(1,), backends=("auto",),
                  precision: Precision = Precision.F32,
                  l_points: int = DEFAULT_L_POINTS,
                  repeats: int = 3, seed: int = 11) -> list[BenchRow]:
    rows: list[BenchRow] = []
    for backend_name_ in backends:
        kern = get_backend(backend_name_)
        label = kern.BACKEND_NAME
        for size in sizes:
            n, np_cols = SIZES[size]
            prob = _problem(size, precision, seed)
            psi, s = prob.psi, prob.s_vec
            for nthreads in threads:
                ts0 = time.perf_counter_ns()
                build_ar_regression(
                    gen_ar_process([-1.2, 0.5], 1.0, n + 2 * np_cols + 8, seed),
                    ModelSpec(kind=ModelKind.AR, q=np_cols - 1, n_rows=n),
                    dtype=precision.dtype)
                build_ns = time.perf_counter_ns() - ts0
                rows.append(BenchRow("build", "-", size, n, np_cols,
                                     nthreads, label, build_ns, 0))
                q = None
                for method in methods:
                    kfn = getattr(kern, _METHOD_KERNELS[method])
                    out = {}

                    def run_qr(kfn=kfn, out=out):
                        out["res"] = kfn(psi, nthreads)

                    wall = _time_best(run_qr, repeats)
                    qm, _rm, stats = out["res"]
                    if method is QrMethod.GRAM_SCHMIDT or q is None:
                        q = qm
                    rows.append(BenchRow("qr", method.value, size, n, np_cols,
                                         nthreads, label, wall,
                                         stats["flops"]))
                wall = _time_best(lambda: kern.qt_dot(q, s, nthreads), repeats)
                _, stats = kern.qt_dot(q, s, nthreads)
                rows.append(BenchRow("vcu", "-", size, n, np_cols, nthreads,
                                     label, wall, stats["flops"]))
                theta = np.zeros(np_cols, dtype=precision.dtype)
                wall = _time_best(
                    lambda: kern.residual_sumsq(psi, theta, s, nthreads),
                    repeats)
                _, stats = kern.residual_sumsq(psi, theta, s, nthreads)
                rows.append(BenchRow("noisevar", "-", size, n, np_cols,
                                     nthreads, label, wall, stats["flops"]))
                beta = np.zeros(np_cols, dtype=np.float64)
                beta[0] = -0.9

                def run_psd():
                    kern.psd_eval(beta, None, 1.0, 0.01, l_points, 100.0,
                                  None, False, precision.dtype, nthreads)

                wall = _time_best(run_psd, repeats)
                _, _, stats = kern.psd_eval(beta, None, 1.0, 0.01, l_points,
                                            100.0, None, False,
                                            precision.dtype, nthreads)
                rows.append(BenchRow("psd", "-", size, n, np_cols, nthreads,
                                     label, wall, stats["flops"]))
    return rows


def pipeline_shares(rows: list[BenchRow], size: str) -> dict[str, float]:
    """Fraction of pipeline wall time per component at one size."""
    relevant = [r for r in rows if r.size == size]
    total = sum(r.wall_ns for r in relevant)
    shares: dict[str, float] = {}
    for r in relevant:
        key = r.component if r.component != "qr" else f"qr[{r.method}]"
        shares[key] = shares.get(key, 0.0) + r.wall_ns / total
    return shares


def format_table(rows: list[BenchRow]) -> str:
    header = (f"{'component':<10} {'method':<7} {'size':<7} {'threads':>7} "
              f"{'backend':<7} {'wall_us':>12} {'flops':>12}")
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r.component:<10} {r.method:<7} {r.size:<7} "
                     f"{r.threads:>7} {r.backend:<7} "
                     f"{r.wall_ns / 1000.0:>12.1f} {r.flops:>12}")
    return "\n".join(lines)


def compare_backends(sizes=("medium",), repeats: int = 3) -> list[BenchRow]:
    """Time the same kernels on every available backend."""
    return run_benchmark(sizes=sizes,
                         methods=tuple(QrMethod),
                         backends=tuple(available_backends()),
                         repeats=repeats)
