"""Spectral damage detection: peak extraction, healthy/test peak
matching, percentage frequency shifts, alarm policy, and the
Itakura-Saito divergence between spectra.

A peak is a strict interior local maximum; its prominence is its height
above the higher of the two flanking minima, where a flanking minimum is
the lowest value between the peak and the nearest strict local maximum
(or series end) on that side.  Prominence filtering suppresses the
spurious ripples all-pole spectra tend to carry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, NonPositiveBinError, ValidationError
from .parallel import ExecContext
from .spectrum import Spectrum, TrigTable, psd_of
from .sysid import SysIdModel

#: Bins at or below this are rejected by the divergence rather than clamped.
ISD_MIN_BIN = 1e-30


@dataclass(frozen=True)
class Peak:
    freq_hz: float
    magnitude: float
    prominence: float


@dataclass(frozen=True, eq=False)
class PeakSet:
    peaks: tuple[Peak, ...]
    source: str = ""

    def __post_init__(self):
        freqs = [p.freq_hz for p in self.peaks]
        if freqs != sorted(freqs):
            raise ValidationError("peaks must be sorted by frequency")

    def __len__(self) -> int:
        return len(self.peaks)

    @property
    def freqs_hz(self) -> list[float]:
        return [p.freq_hz for p in self.peaks]


@dataclass(frozen=True)
class DetectConfig:
    min_prominence_ratio: float = 0.05
    max_peaks: int = 8
    max_rel_shift: float = 0.25
    threshold_percent: float = 2.0
    alarm_on_unmatched: bool = True
    l_points: int = 2048


@dataclass(frozen=True, eq=False)
class DamageReport:
    matched_pairs: tuple[dict, ...]
    min_delta_f: float
    max_delta_f: float
    alarm: bool
    threshold_percent: float
    unmatched_healthy: tuple[float, ...] = ()
    unmatched_test: tuple[float, ...] = ()


def find_peaks(spec: Spectrum, cfg: DetectConfig = DetectConfig()) -> PeakSet:
    """Strict local maxima with prominence >= ratio * global maximum."""
    psd = np.asarray(spec.psd, dtype=np.float64)
    n = psd.shape[0]
    gmax = float(psd.max()) if n else 0.0
    if gmax <= 0.0:
        return PeakSet(peaks=())
    is_max = np.zeros(n, dtype=bool)
    is_max[1:-1] = (psd[1:-1] > psd[:-2]) & (psd[1:-1] > psd[2:])
    max_idx = np.flatnonzero(is_max)
    candidates = []
    for i in max_idx:
        left = _flank_min(psd, max_idx, i, left=True)
        right = _flank_min(psd, max_idx, i, left=False)
        prom = psd[i] - max(left, right)
        if prom >= cfg.min_prominence_ratio * gmax:
            candidates.append(Peak(freq_hz=float(spec.freqs[i]),
                                   magnitude=float(psd[i]),
                                   prominence=float(prom)))
    candidates.sort(key=lambda p: p.prominence, reverse=True)
    kept = sorted(candidates[:cfg.max_peaks], key=lambda p: p.freq_hz)
    return PeakSet(peaks=tuple(kept))


def _flank_min(psd: np.ndarray, max_idx: np.ndarray, i: int,
               left: bool) -> float:
    """Lowest value between peak i and the nearest strict maximum beside it."""
    if left:
        prior = max_idx[max_idx < i]
        lo = int(prior[-1]) if prior.size else 0
        return float(psd[lo:i].min())
    nxt = max_idx[max_idx > i]
    hi = int(nxt[0]) if nxt.size else psd.shape[0] - 1
    return float(psd[i + 1:hi + 1].min())


def match_peaks(healthy: PeakSet, test: PeakSet,
                max_rel_shift: float = 0.25):
    """Greedy nearest-frequency pairing within a relative window.

    Candidate pairs are taken globally by ascending relative distance;
    peaks left over on either side are reported unmatched (a vanished
    peak must surface as unmatched, never as a bogus pair).
    Returns (pairs, unmatched_healthy, unmatched_test).
    """
    cands = []
    for ih, ph in enumerate(healthy.peaks):
        if ph.freq_hz <= 0:
            continue
        for it, pt in enumerate(test.peaks):
            rel = abs(pt.freq_hz - ph.freq_hz) / ph.freq_hz
            if rel <= max_rel_shift:
                cands.append((rel, ih, it))
    cands.sort()
    used_h: set[int] = set()
    used_t: set[int] = set()
    pairs = []
    for rel, ih, it in cands:
        if ih in used_h or it in used_t:
            continue
        used_h.add(ih)
        used_t.add(it)
        f_safe = healthy.peaks[ih].freq_hz
        f_def = test.peaks[it].freq_hz
        pairs.append({
            "f_safe": f_safe,
            "f_def": f_def,
            "delta_f_percent": 100.0 * (1.0 - f_def / f_safe),
        })
    pairs.sort(key=lambda d: d["f_safe"])
    unmatched_h = tuple(p.freq_hz for i, p in enumerate(healthy.peaks)
                        if i not in used_h)
    unmatched_t = tuple(p.freq_hz for i, p in enumerate(test.peaks)
                        if i not in used_t)
    return pairs, unmatched_h, unmatched_t


def isd(psd_a: Spectrum, psd_b: Spectrum) -> float:
    """Itakura-Saito divergence (1/L) sum(r - log r - 1), r = a/b.

    Asymmetric; zero iff the spectra are identical. Bins at or below
    ISD_MIN_BIN are rejected to keep the ratio meaningful.
    """
    if psd_a.psd.shape != psd_b.psd.shape:
        raise GridMismatchError("spectra have different lengths")
    if not np.array_equal(psd_a.freqs, psd_b.freqs):
        raise GridMismatchError("spectra are on different frequency grids")
    a = np.asarray(psd_a.psd, dtype=np.float64)
    b = np.asarray(psd_b.psd, dtype=np.float64)
    if (a <= ISD_MIN_BIN).any() or (b <= ISD_MIN_BIN).any():
        raise NonPositiveBinError(
            f"divergence requires all bins > {ISD_MIN_BIN}")
    r = a / b
    return float(np.mean(r - np.log(r) - 1.0))


def assess(healthy_model: SysIdModel, test_model: SysIdModel,
           cfg: DetectConfig = DetectConfig(),
           table: TrigTable | None = None,
           ctx: ExecContext | None = None) -> DamageReport:
    """Synthesize both spectra, match their peaks, and decide the alarm.

    The alarm fires when the largest matched |delta F| reaches the
    threshold, or (by default) when any healthy peak goes unmatched.
    """
    if healthy_model.kind is not test_model.kind:
        raise ValidationError("models must share the same kind")
    spec_h = psd_of(healthy_model, cfg.l_points, table=table, ctx=ctx)
    spec_t = psd_of(test_model, cfg.l_points, table=table, ctx=ctx)
    peaks_h = find_peaks(spec_h, cfg)
    peaks_t = find_peaks(spec_t, cfg)
    pairs, unmatched_h, unmatched_t = match_peaks(peaks_h, peaks_t,
                                                  cfg.max_rel_shift)
    abs_shifts = [abs(p["delta_f_percent"]) for p in pairs]
    min_df = min(abs_shifts) if abs_shifts else 0.0
    max_df = max(abs_shifts) if abs_shifts else 0.0
    alarm = max_df >= cfg.threshold_percent
    if cfg.alarm_on_unmatched and unmatched_h:
        alarm = True
    return DamageReport(
        matched_pairs=tuple(pairs),
        min_delta_f=min_df,
        max_delta_f=max_df,
        alarm=alarm,
        threshold_percent=cfg.threshold_percent,
        unmatched_healthy=unmatched_h,
        unmatched_test=unmatched_t,
    )
