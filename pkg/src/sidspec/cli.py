"""Batch front-end: fit models, assess damage, print footprints, run
benchmarks, and generate synthetic fixtures.

Input format: plain text, one sample per line, with optional comment
header lines like ``# sample_rate_hz=100.0``; binary little-endian
float32 is accepted with ``--format f32le --rate <hz>``.  Outputs are
JSON documents with a mandatory ``version`` field; spectra are written
as two-column text (freq_hz, psd) ready for any plotting tool.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
error.  Errors print a one-line JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from ._backend import available_backends, backend_name
from .bench import SIZES, format_table, pipeline_shares, run_benchmark
from .detect import DetectConfig, assess, isd
from .errors import NumericalError, SidspecError, ValidationError
from .footprint import estimate_qr_footprint
from .model import ModelKind, ModelSpec, TimeSeries
from .oracle import PRNG_ALGORITHM, gen_ar_process, gen_arma_process
from .parallel import THREADS_ENV_VAR, ExecContext
from .qrmethod import Precision, QrMethod
from .spectrum import DEFAULT_L_POINTS, DEFAULT_TABLE_SIZE, TrigTable, psd_of
from .sysid import SysIdModel, fit

OUTPUT_VERSION = 1

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fail(code: int, message: str) -> "CliError":
    return CliError(code, message)


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def read_series(path: str, fmt: str = "text",
                rate: float | None = None) -> TimeSeries:
    try:
        if fmt == "f32le":
            if rate is None:
                raise _fail(EXIT_CONFIG, "--rate is required with --format f32le")
            raw = np.fromfile(path, dtype="<f4").astype(np.float64)
            return TimeSeries(samples=raw, sample_rate_hz=rate)
        header_rate = None
        samples = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if "sample_rate_hz=" in line:
                        header_rate = float(line.split("sample_rate_hz=")[1].split()[0])
                    continue
                samples.append(float(line))
        fs = rate if rate is not None else header_rate
        if fs is None:
            raise _fail(EXIT_CONFIG,
                        f"{path}: no sample rate (header or --rate)")
        return TimeSeries(samples=np.asarray(samples), sample_rate_hz=fs)
    except CliError:
        raise
    except OSError as exc:
        raise _fail(EXIT_IO, f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise _fail(EXIT_IO, f"cannot parse {path}: {exc}") from None


def write_series(path: str, ts: TimeSeries, meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# sample_rate_hz={ts.sample_rate_hz!r}\n")
        for key, val in meta.items():
            fh.write(f"# {key}={val}\n")
        for v in ts.samples:
            fh.write(f"{float(v)!r}\n")


def write_spectrum(path: str, freqs, psd) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# freq_hz psd\n")
        for f, p in zip(freqs, psd):
            fh.write(f"{float(f)!r} {float(p)!r}\n")


def model_to_dict(model: SysIdModel) -> dict:
    return {
        "version": OUTPUT_VERSION,
        "kind": model.spec.kind.value,
        "q": model.spec.q,
        "p": model.spec.p,
        "stage1_order": model.spec.stage1_order,
        "n_rows": model.spec.n_rows,
        "theta": [float(v) for v in model.theta],
        "sigma2": float(model.sigma2),
        "sample_rate_hz": model.sample_rate_hz,
        "diagnostics": model.fit_diagnostics,
    }


def model_from_dict(doc: dict) -> SysIdModel:
    spec = ModelSpec(kind=ModelKind(doc["kind"]), q=doc["q"], p=doc["p"],
                     n_rows=doc["n_rows"], stage1_order=doc["stage1_order"])
    return SysIdModel(spec=spec, theta=np.asarray(doc["theta"]),
                      sigma2=doc["sigma2"],
                      sample_rate_hz=doc["sample_rate_hz"],
                      fit_diagnostics=doc.get("diagnostics", {}))


# ---------------------------------------------------------------------------
# Argument plumbing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker count (default: ${THREADS_ENV_VAR} or 1)")
    p.add_argument("--precision", choices=["f32", "f64"], default="f32")
    p.add_argument("--qr", choices=["givens", "gs", "hh"], default="gs")
    p.add_argument("--seed", type=int, default=0)


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=["ar", "arma"], default="ar")
    p.add_argument("--q", type=int, default=15,
                   help="AR order parameter (Np = q+1 lags for AR)")
    p.add_argument("--p", type=int, default=0, help="MA order (ARMA only)")
    p.add_argument("--stage1-order", type=int, default=None)
    p.add_argument("--n-rows", type=int, default=480)
    p.add_argument("--l-points", type=int, default=DEFAULT_L_POINTS)
    p.add_argument("--trig-table", choices=["off", "nearest", "linear"],
                   default="off")
    p.add_argument("--format", choices=["text", "f32le"], default="text")
    p.add_argument("--rate", type=float, default=None,
                   help="sample rate override (Hz)")


def _context(args) -> ExecContext:
    if args.threads is not None:
        if args.threads < 1:
            raise _fail(EXIT_CONFIG, "--threads must be >= 1")
        return ExecContext(worker_count=args.threads)
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return ExecContext(worker_count=max(1, int(raw)))
    except ValueError:
        return ExecContext(worker_count=1)


def _spec_from_args(args) -> ModelSpec:
    try:
        return ModelSpec(kind=ModelKind(args.kind), q=args.q, p=args.p,
                         n_rows=args.n_rows, stage1_order=args.stage1_order)
    except ValidationError as exc:
        raise _fail(EXIT_CONFIG, str(exc)) from None


def _table_from_args(args) -> TrigTable | None:
    if args.trig_table == "off":
        return None
    return TrigTable(resolution=DEFAULT_TABLE_SIZE,
                     linear_interp=(args.trig_table == "linear"))


def _fit_file(path: str, args, ctx: ExecContext) -> SysIdModel:
    ts = read_series(path, args.format, args.rate)
    spec = _spec_from_args(args)
    try:
        return fit(ts, spec, QrMethod.parse(args.qr),
                   Precision.parse(args.precision), ctx)
    except ValidationError as exc:
        raise _fail(EXIT_CONFIG, str(exc)) from None
    except NumericalError as exc:
        raise _fail(EXIT_NUMERICAL, str(exc)) from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_fit(args) -> int:
    ctx = _context(args)
    model = _fit_file(args.input, args, ctx)
    doc = model_to_dict(model)
    doc["diagnostics"]["backend"] = backend_name()
    payload = json.dumps(doc, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_assess(args) -> int:
    ctx = _context(args)
    healthy = _fit_file(args.healthy, args, ctx)
    test = _fit_file(args.test, args, ctx)
    cfg = DetectConfig(threshold_percent=args.threshold,
                       min_prominence_ratio=args.min_prominence,
                       max_peaks=args.max_peaks,
                       max_rel_shift=args.max_rel_shift,
                       l_points=args.l_points)
    table = _table_from_args(args)
    try:
        report = assess(healthy, test, cfg, table=table, ctx=ctx)
        spec_h = psd_of(healthy, cfg.l_points, table=table, ctx=ctx)
        spec_t = psd_of(test, cfg.l_points, table=table, ctx=ctx)
        divergence = isd(spec_t, spec_h)
    except NumericalError as exc:
        raise _fail(EXIT_NUMERICAL, str(exc)) from None
    doc = {
        "version": OUTPUT_VERSION,
        "alarm": report.alarm,
        "threshold_percent": report.threshold_percent,
        "matched_pairs": list(report.matched_pairs),
        "min_delta_f": report.min_delta_f,
        "max_delta_f": report.max_delta_f,
        "unmatched_healthy": list(report.unmatched_healthy),
        "unmatched_test": list(report.unmatched_test),
        "isd_test_vs_healthy": divergence,
    }
    payload = json.dumps(doc, indent=2, sort_keys=True)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
        base = os.path.splitext(args.output)[0]
    else:
        print(payload)
        base = "assess"
    write_spectrum(base + ".healthy.psd.txt", spec_h.freqs, spec_h.psd)
    write_spectrum(base + ".test.psd.txt", spec_t.freqs, spec_t.psd)
    return 0


def cmd_footprint(args) -> int:
    method = QrMethod.parse(args.qr)
    try:
        est = estimate_qr_footprint(method, args.n, args.np, args.elem_bytes)
    except ValidationError as exc:
        raise _fail(EXIT_CONFIG, str(exc)) from None
    doc = {
        "version": OUTPUT_VERSION,
        "method": method.value,
        "n": args.n,
        "np": args.np,
        "elem_bytes": args.elem_bytes,
        "working_words": est.working_words,
        "working_bytes": est.working_words * args.elem_bytes,
        "flops_estimate": est.flops_estimate,
        "pipeline_bytes": est.pipeline_bytes,
        "pipeline_kb": est.pipeline_bytes / 1000.0,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    sizes = tuple(s.strip() for s in args.sizes.split(",") if s.strip())
    for s in sizes:
        if s not in SIZES:
            raise _fail(EXIT_CONFIG, f"unknown size {s!r}")
    try:
        threads = tuple(int(t) for t in args.threads_list.split(","))
        methods = tuple(QrMethod.parse(m) for m in args.methods.split(","))
    except ValueError as exc:
        raise _fail(EXIT_CONFIG, str(exc)) from None
    if args.backend == "both":
        backends = tuple(available_backends())
    else:
        backends = (args.backend,)
    try:
        rows = run_benchmark(sizes=sizes, methods=methods, threads=threads,
                             backends=backends,
                             precision=Precision.parse(args.precision),
                             l_points=args.l_points, repeats=args.repeats,
                             seed=args.seed)
    except RuntimeError as exc:
        raise _fail(EXIT_CONFIG, str(exc)) from None
    print(format_table(rows))
    for size in sizes:
        shares = pipeline_shares(rows, size)
        ranked = sorted(shares.items(), key=lambda kv: -kv[1])
        summary = ", ".join(f"{k}={v:.1%}" for k, v in ranked)
        print(f"shares[{size}]: {summary}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"version": OUTPUT_VERSION,
                       "rows": [r.as_dict() for r in rows]}, fh, indent=2)
    return 0


def _parse_floats(text: str, flag: str) -> list[float]:
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise _fail(EXIT_CONFIG,
                    f"{flag} expects comma-separated numbers, got {text!r}") \
            from None


def cmd_gen(args) -> int:
    beta = _parse_floats(args.coeffs, "--coeffs")
    try:
        if args.kind == "ar":
            ts = gen_ar_process(beta, args.sigma, args.n, args.seed,
                                sample_rate_hz=args.rate or 100.0)
        else:
            alpha = _parse_floats(args.alpha, "--alpha")
            ts = gen_arma_process(beta, alpha, args.sigma, args.n, args.seed,
                                  sample_rate_hz=args.rate or 100.0)
    except NumericalError as exc:
        raise _fail(EXIT_NUMERICAL, str(exc)) from None
    meta = {"prng": PRNG_ALGORITHM, "seed": args.seed,
            "kind": args.kind, "coeffs": args.coeffs or "",
            "sigma": args.sigma}
    if args.kind == "arma":
        meta["alpha"] = args.alpha or ""
    write_series(args.output, ts, meta)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sidspec",
        description="Vibration system identification and spectral damage detection")
    ap.add_argument("--version", action="version",
                    version=f"sidspec {__version__} ({backend_name()} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to a time-series file")
    p.add_argument("input")
    p.add_argument("--output", "-o", default=None)
    _add_common(p)
    _add_model(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("assess", help="compare a test recording to a healthy one")
    p.add_argument("healthy")
    p.add_argument("test")
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--threshold", type=float, default=2.0,
                   help="alarm threshold on |delta F| in percent")
    p.add_argument("--min-prominence", type=float, default=0.05)
    p.add_argument("--max-peaks", type=int, default=8)
    p.add_argument("--max-rel-shift", type=float, default=0.25)
    _add_common(p)
    _add_model(p)
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("footprint", help="print the resource model for a QR kernel")
    p.add_argument("--qr", choices=["givens", "gs", "hh"], default="gs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--np", type=int, required=True)
    p.add_argument("--elem-bytes", type=int, default=4)
    p.set_defaults(func=cmd_footprint)

    p = sub.add_parser("bench", help="benchmark pipeline components")
    p.add_argument("--sizes", default="medium")
    p.add_argument("--methods", default="gs,givens,hh")
    p.add_argument("--threads-list", default="1")
    p.add_argument("--backend", choices=["auto", "cython", "python", "both"],
                   default="auto")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--l-points", type=int, default=DEFAULT_L_POINTS)
    p.add_argument("--json", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate a synthetic fixture series")
    p.add_argument("output")
    p.add_argument("--kind", choices=["ar", "arma"], default="ar")
    p.add_argument("--coeffs", default="",
                   help="comma-separated monic AR coefficients")
    p.add_argument("--alpha", default="",
                   help="comma-separated MA coefficients (ARMA)")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--rate", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": str(exc), "code": exc.code}),
              file=sys.stderr)
        return exc.code
    except ValidationError as exc:
        print(json.dumps({"error": str(exc), "code": EXIT_CONFIG}),
              file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(json.dumps({"error": str(exc), "code": EXIT_NUMERICAL}),
              file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(json.dumps({"error": str(exc), "code": EXIT_IO}),
              file=sys.stderr)
        return EXIT_IO
    except SidspecError as exc:
        print(json.dumps({"error": str(exc), "code": EXIT_NUMERICAL}),
              file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
