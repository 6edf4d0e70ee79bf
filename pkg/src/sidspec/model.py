"""Regression-problem construction for AR and ARMA identification.

Lag convention: each target s[k] is regressed on exactly Np strictly-past
lags.  For an AR spec of order q that means the Np = q+1 lags
s[k-1] ... s[k-Np]; for ARMA stage two the row concatenates q lagged
outputs with the p+1 residual estimates e[k] ... e[k-p] (beta block first,
alpha block second).  Rows always cover the most recent n_rows valid
targets of the signal; earlier samples serve only as lag history.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionError, NonFiniteError, SignalTooShortError,
                     ValidationError)


class ModelKind(enum.Enum):
    AR = "ar"
    ARMA = "arma"


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled scalar signal plus its sample rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError("samples must be one-dimensional")
        if samples.shape[0] < 2:
            raise ValidationError("need at least two samples")
        if not np.isfinite(samples).all():
            raise NonFiniteError("samples contain NaN or infinity")
        if not (self.sample_rate_hz > 0):
            raise ValidationError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def ts_s(self) -> float:
        return 1.0 / self.sample_rate_hz


def default_stage1_order(np_params: int, n_rows: int) -> int:
    return min(2 * np_params, n_rows // 4)


@dataclass(frozen=True)
class ModelSpec:
    """Model kind, orders, and regression row count.

    For AR the parameter count is Np = q + 1 (that many past lags); for
    ARMA it is Np = q + p + 1.  ``stage1_order`` is the order of the
    auxiliary long AR fit used to estimate the ARMA residuals; it
    defaults to min(2 Np, n_rows / 4).
    """

    kind: ModelKind
    q: int
    n_rows: int
    p: int = 0
    stage1_order: int | None = None

    def __post_init__(self):
        if self.q < 1:
            raise ValidationError(f"q must be >= 1, got {self.q}")
        if self.p < 0:
            raise ValidationError(f"p must be >= 0, got {self.p}")
        if self.kind is ModelKind.AR and self.p != 0:
            raise ValidationError("AR spec requires p = 0")
        # strict n_rows > Np is enforced where sigma2 is computed; the
        # regression build itself only needs enough rows to exist
        if self.n_rows < self.np_params:
            raise ValidationError(
                f"n_rows ({self.n_rows}) must be >= Np ({self.np_params})")
        if self.kind is ModelKind.ARMA:
            s1 = self.stage1_order
            if s1 is None:
                s1 = default_stage1_order(self.np_params, self.n_rows)
                object.__setattr__(self, "stage1_order", s1)
            if s1 < self.q + self.p:
                raise ValidationError(
                    f"stage1_order ({s1}) must be >= q + p ({self.q + self.p})")

    @property
    def np_params(self) -> int:
        if self.kind is ModelKind.AR:
            return self.q + 1
        return self.q + self.p + 1


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    psi: np.ndarray
    s_vec: np.ndarray
    spec: ModelSpec

    def __post_init__(self):
        n, np_ = self.psi.shape
        if n != self.spec.n_rows or np_ != self.spec.np_params:
            raise DimensionError(
                f"psi must be {self.spec.n_rows}x{self.spec.np_params}, "
                f"got {n}x{np_}")
        if self.s_vec.shape != (n,):
            raise DimensionError("s_vec length must equal the row count")
        if not (np.isfinite(self.psi).all() and np.isfinite(self.s_vec).all()):
            raise NonFiniteError("regression problem contains non-finite entries")


def _lag_block(x: np.ndarray, targets_start: int, n_rows: int,
               n_lags: int, first_lag: int) -> np.ndarray:
    """Rows of lagged values x[k-first_lag] ... x[k-first_lag-n_lags+1]."""
    cols = [x[targets_start - lag: targets_start - lag + n_rows]
            for lag in range(first_lag, first_lag + n_lags)]
    return np.stack(cols, axis=1)


def build_ar_regression(ts: TimeSeries, spec: ModelSpec,
                        dtype=np.float64) -> RegressionProblem:
    """Regression matrix of strictly-past lags for an AR fit."""
    if spec.kind is not ModelKind.AR:
        raise ValidationError("spec.kind must be AR")
    return _build_lagged(ts.samples, spec, spec.np_params, dtype)


def _build_lagged(samples: np.ndarray, spec: ModelSpec, n_lags: int,
                  dtype) -> RegressionProblem:
    n = spec.n_rows
    length = samples.shape[0]
    if length < n + n_lags:
        raise SignalTooShortError(
            f"need at least {n + n_lags} samples for {n} rows with "
            f"{n_lags} lags, got {length}")
    targets_start = length - n
    s_vec = samples[targets_start:]
    psi = _lag_block(samples, targets_start, n, n_lags, 1)
    return RegressionProblem(psi=np.ascontiguousarray(psi, dtype=dtype),
                             s_vec=np.ascontiguousarray(s_vec, dtype=dtype),
                             spec=spec)


def build_arma_stage2_regression(ts: TimeSeries, residuals: np.ndarray,
                                 spec: ModelSpec,
                                 dtype=np.float64) -> RegressionProblem:
    """Second-stage ARMA regression: lagged outputs plus lagged residuals.

    ``residuals`` must have the same length as the signal, with the
    warm-up prefix marked NaN; rows are the most recent n_rows targets
    whose q output lags and p+1 residual lags are all available.
    """
    if spec.kind is not ModelKind.ARMA:
        raise ValidationError("spec.kind must be ARMA")
    samples = ts.samples
    residuals = np.asarray(residuals, dtype=np.float64)
    if residuals.shape != samples.shape:
        raise DimensionError("residuals must have the same length as the signal")
    n = spec.n_rows
    length = samples.shape[0]
    valid = np.isfinite(residuals)
    first_valid = int(np.argmax(valid)) if valid.any() else length
    # target k needs output lags back to k-q and residuals back to k-p
    k_min = max(spec.q, first_valid + spec.p)
    if length - k_min < n:
        raise SignalTooShortError(
            f"only {max(0, length - k_min)} valid targets available, "
            f"need {n}")
    targets_start = length - n
    s_vec = samples[targets_start:]
    beta_block = _lag_block(samples, targets_start, n, spec.q, 1)
    alpha_block = _lag_block(residuals, targets_start, n, spec.p + 1, 0)
    psi = np.concatenate([beta_block, alpha_block], axis=1)
    return RegressionProblem(psi=np.ascontiguousarray(psi, dtype=dtype),
                             s_vec=np.ascontiguousarray(s_vec, dtype=dtype),
                             spec=spec)
