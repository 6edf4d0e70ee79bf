"""Analytic power spectral density on an L-point grid, with an optional
quarter-wave cosine lookup table replacing library trig.

Grid convention: L linearly spaced frequencies f_i = i * fs / (2 L)
covering [0, fs/2); the half-open grid avoids a duplicate Nyquist point.
The PSD of a fitted model follows directly from its coefficients and
noise variance: an all-pole magnitude response for AR, a rational one for
ARMA (numerator lags 0..p, denominator lags 1..q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ValidationError
from .model import ModelKind
from .parallel import ExecContext
from .qrmethod import Precision
from .sysid import SysIdModel

#: Bins whose denominator response falls below this are clamped to
#: 1e12 * sigma2 and reported via Spectrum.saturated_bins.
DENOM_FLOOR = 1e-12
SATURATION_CEILING = 1e12

DEFAULT_L_POINTS = 2048
DEFAULT_TABLE_SIZE = 512


@dataclass(frozen=True, eq=False)
class TrigTable:
    """Cosine samples over the first quarter period [0, pi/2].

    ``entries`` holds T+1 float32 values so both endpoints are exact; the
    closing zero is derivable by symmetry, so the deployable payload is T
    entries (2 KB at the default T = 512).  Values for the full circle
    come from quadrant folding, i.e. index arithmetic plus sign flips.
    """

    resolution: int = DEFAULT_TABLE_SIZE
    linear_interp: bool = False
    entries: np.ndarray = field(init=False)

    def __post_init__(self):
        t = self.resolution
        if t < 2:
            raise ValidationError("table resolution must be >= 2")
        grid = np.arange(t + 1, dtype=np.float64) * (math.pi / 2.0) / t
        entries = np.cos(grid).astype(np.float32)
        entries[0] = 1.0
        entries[t] = 0.0
        entries = np.minimum.accumulate(entries)  # monotone non-increasing
        object.__setattr__(self, "entries", entries)

    @property
    def payload_bytes(self) -> int:
        """Bytes of the quarter-wave payload (excludes the derivable endpoint)."""
        return self.resolution * self.entries.itemsize


def trig_lookup(table: TrigTable, phase: float) -> tuple[float, float]:
    """(cos, sin) of an arbitrary phase by quadrant folding of the table."""
    e = table.entries
    t = table.resolution
    step = (math.pi / 2.0) / t
    red = math.fmod(phase, 2.0 * math.pi)
    if red < 0.0:
        red += 2.0 * math.pi
    idx_f = red / step
    if table.linear_interp:
        i0 = int(math.floor(idx_f))
        frac = idx_f - i0
        c0, s0 = _fold_index(e, t, i0)
        c1, s1 = _fold_index(e, t, i0 + 1)
        return c0 + frac * (c1 - c0), s0 + frac * (s1 - s0)
    return _fold_index(e, t, round(idx_f))


def _fold_index(e: np.ndarray, t: int, idx: int) -> tuple[float, float]:
    idx %= 4 * t
    quad, off = divmod(idx, t)
    a = float(e[off])
    b = float(e[t - off])
    if quad == 0:
        return a, b
    if quad == 1:
        return -b, a
    if quad == 2:
        return -a, -b
    return b, -a


@dataclass(frozen=True, eq=False)
class Spectrum:
    """L-point power density over [0, fs/2) plus saturation diagnostics."""

    psd: np.ndarray
    freqs: np.ndarray
    sample_rate_hz: float
    saturated_bins: int = 0

    def __post_init__(self):
        if self.psd.shape != self.freqs.shape or self.psd.ndim != 1:
            raise ValidationError("psd and freqs must be equal-length vectors")
        if not np.isfinite(self.psd).all() or (self.psd < 0).any():
            raise ValidationError("psd bins must be finite and non-negative")

    @property
    def l_points(self) -> int:
        return self.psd.shape[0]

    def peak_freq_hz(self) -> float:
        return float(self.freqs[int(np.argmax(self.psd))])


def frequency_grid(l_points: int, sample_rate_hz: float) -> np.ndarray:
    return np.arange(l_points, dtype=np.float64) * \
        (sample_rate_hz / (2.0 * l_points))


def _synth(model: SysIdModel, l_points: int, sample_rate_hz: float,
           table: TrigTable | None, ctx: ExecContext | None,
           precision: Precision | None) -> Spectrum:
    if l_points < 2:
        raise ValidationError("l_points must be >= 2")
    workers = 1 if ctx is None else ctx.worker_count
    out_dtype = (precision.dtype if precision is not None
                 else (np.float32
                       if model.fit_diagnostics.get("precision") == "f32"
                       else np.float64))
    beta = np.ascontiguousarray(model.beta, dtype=np.float64)
    alpha = (np.ascontiguousarray(model.alpha, dtype=np.float64)
             if model.kind is ModelKind.ARMA else None)
    entries = table.entries if table is not None else None
    linear = table.linear_interp if table is not None else False
    psd, n_sat, stats = kernels.psd_eval(
        beta, alpha, float(model.sigma2), 1.0 / sample_rate_hz, l_points,
        sample_rate_hz, entries, linear, out_dtype, workers)
    if ctx is not None:
        ctx.stats.add(flops=stats["flops"], barriers=stats["barriers"])
    return Spectrum(psd=psd, freqs=frequency_grid(l_points, sample_rate_hz),
                    sample_rate_hz=sample_rate_hz, saturated_bins=n_sat)


def psd_ar(model: SysIdModel, l_points: int = DEFAULT_L_POINTS,
           sample_rate_hz: float | None = None,
           table: TrigTable | None = None,
           ctx: ExecContext | None = None,
           precision: Precision | None = None) -> Spectrum:
    """All-pole analytic PSD of a fitted AR model."""
    if model.kind is not ModelKind.AR:
        raise ValidationError("model must be AR")
    fs = model.sample_rate_hz if sample_rate_hz is None else sample_rate_hz
    return _synth(model, l_points, fs, table, ctx, precision)


def psd_arma(model: SysIdModel, l_points: int = DEFAULT_L_POINTS,
             sample_rate_hz: float | None = None,
             table: TrigTable | None = None,
             ctx: ExecContext | None = None,
             precision: Precision | None = None) -> Spectrum:
    """Rational analytic PSD of a fitted ARMA model."""
    if model.kind is not ModelKind.ARMA:
        raise ValidationError("model must be ARMA")
    fs = model.sample_rate_hz if sample_rate_hz is None else sample_rate_hz
    return _synth(model, l_points, fs, table, ctx, precision)


def psd_of(model: SysIdModel, l_points: int = DEFAULT_L_POINTS,
           sample_rate_hz: float | None = None,
           table: TrigTable | None = None,
           ctx: ExecContext | None = None,
           precision: Precision | None = None) -> Spectrum:
    """Dispatch to psd_ar or psd_arma by model kind."""
    fn = psd_ar if model.kind is ModelKind.AR else psd_arma
    return fn(model, l_points, sample_rate_hz, table, ctx, precision)


def psd_value(model: SysIdModel, freq_hz: float,
              sample_rate_hz: float | None = None) -> float:
    """PSD at one arbitrary frequency, via direct phase evaluation."""
    fs = model.sample_rate_hz if sample_rate_hz is None else sample_rate_hz
    w = 2.0 * math.pi * freq_hz / fs
    beta = model.beta
    den = 1.0 + sum(b * np.exp(-1j * w * (j + 1)) for j, b in enumerate(beta))
    den2 = abs(den) ** 2
    if model.kind is ModelKind.ARMA:
        alpha = model.alpha
        num = 1.0 + sum(a * np.exp(-1j * w * s) for s, a in enumerate(alpha))
        num2 = abs(num) ** 2
    else:
        num2 = 1.0
    if den2 < DENOM_FLOOR:
        return SATURATION_CEILING * model.sigma2
    return model.sigma2 * num2 / den2
