"""The four-step identification workflow: regression build, QR solve,
coefficient extraction, noise-variance estimate; ARMA runs it twice.

Coefficients are reported in the monic left-hand-side convention
s[k] + sum_i beta_i s[k-i] = driving noise, i.e. the negation of the raw
least-squares solution, so fitted values compare directly with generator
coefficients and plug into the analytic spectrum unchanged.  For ARMA the
leading residual regressor absorbs both the unit noise term and alpha_0,
so alpha_0 = theta_raw[q] - 1 while the remaining alphas are taken as-is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ValidationError
from .model import (ModelKind, ModelSpec, RegressionProblem, TimeSeries,
                    build_ar_regression, build_arma_stage2_regression)
from .parallel import ExecContext
from .qr import back_substitution, factorize
from .qrmethod import Precision, QrMethod


@dataclass(eq=False)
class SysIdModel:
    spec: ModelSpec
    theta: np.ndarray
    sigma2: float
    sample_rate_hz: float
    fit_diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theta.shape != (self.spec.np_params,):
            raise ValidationError("theta length must equal Np")
        if not (np.isfinite(self.sigma2) and self.sigma2 >= 0):
            raise ValidationError("sigma2 must be finite and >= 0")

    @property
    def kind(self) -> ModelKind:
        return self.spec.kind

    @property
    def beta(self) -> np.ndarray:
        """AR-side coefficients (all of theta for AR, first q for ARMA)."""
        if self.spec.kind is ModelKind.AR:
            return self.theta
        return self.theta[:self.spec.q]

    @property
    def alpha(self) -> np.ndarray:
        """MA-side coefficients alpha_0..alpha_p (empty for AR)."""
        if self.spec.kind is ModelKind.AR:
            return self.theta[:0]
        return self.theta[self.spec.q:]


def solve_regression(prob: RegressionProblem, method: QrMethod,
                     ctx: ExecContext | None = None):
    """Least-squares solve of S = Psi Theta; returns (theta, sigma2).

    theta is the raw regression solution R^{-1} Q^T S; sigma2 is the
    residual power per degree of freedom ||S - Psi theta||^2 / (N - Np).
    """
    theta, sigma2, _ = _solve_full(prob, method, ctx)
    return theta, sigma2


def _solve_full(prob: RegressionProblem, method: QrMethod,
                ctx: ExecContext | None = None):
    n, np_ = prob.psi.shape
    if n <= np_:
        raise ValidationError(
            f"need n_rows > Np for the noise-variance denominator, "
            f"got {n} rows for {np_} parameters")
    workers = 1 if ctx is None else ctx.worker_count
    factors = factorize(prob.psi, method, ctx)
    qts, stats_v = kernels.qt_dot(factors.q_mat, prob.s_vec, workers)
    theta = back_substitution(factors.r_mat, qts)
    ssq, stats_r = kernels.residual_sumsq(prob.psi, theta, prob.s_vec, workers)
    n, np_ = prob.psi.shape
    sigma2 = ssq / (n - np_)
    if ctx is not None:
        ctx.stats.add(flops=stats_v["flops"] + stats_r["flops"],
                      barriers=stats_v["barriers"] + stats_r["barriers"])
    return theta, sigma2, factors


def _ar_predict_residuals(samples: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """One-step-ahead residuals e[k] = s[k] + sum_i beta_i s[k-i].

    The warm-up prefix (first len(beta) entries) is NaN.
    """
    order = beta.shape[0]
    kernel = np.concatenate(([1.0], beta))
    res = np.convolve(samples, kernel, mode="valid")
    out = np.full(samples.shape[0], np.nan)
    out[order:] = res
    return out


def fit(ts: TimeSeries, spec: ModelSpec, method: QrMethod = QrMethod.GRAM_SCHMIDT,
        precision: Precision = Precision.F64,
        ctx: ExecContext | None = None) -> SysIdModel:
    """Fit an AR or ARMA model to the time series.

    theta ordering is [beta_1..beta_Np] for AR and
    [beta_1..beta_q, alpha_0..alpha_p] for ARMA.
    """
    dtype = precision.dtype
    if spec.kind is ModelKind.AR:
        prob = build_ar_regression(ts, spec, dtype=dtype)
        theta_raw, sigma2, factors = _solve_full(prob, method, ctx)
        theta = -theta_raw.astype(np.float64)
        resid_norm = float(np.sqrt(sigma2 * (spec.n_rows - spec.np_params)))
        return SysIdModel(
            spec=spec, theta=theta, sigma2=float(sigma2),
            sample_rate_hz=ts.sample_rate_hz,
            fit_diagnostics=_diag(resid_norm, method, precision, factors))
    if spec.p == 0:
        raise ValidationError(
            "ARMA with p = 0 aliases AR; use an AR spec instead")
    s1 = spec.stage1_order
    stage1_spec = ModelSpec(kind=ModelKind.AR, q=s1 - 1, n_rows=spec.n_rows)
    prob1 = build_ar_regression(ts, stage1_spec, dtype=dtype)
    theta1_raw, _, _ = _solve_full(prob1, method, ctx)
    beta1 = -theta1_raw.astype(np.float64)
    residuals = _ar_predict_residuals(ts.samples, beta1)
    prob2 = build_arma_stage2_regression(ts, residuals, spec, dtype=dtype)
    theta_raw, sigma2, factors = _solve_full(prob2, method, ctx)
    theta_raw = theta_raw.astype(np.float64)
    beta = -theta_raw[:spec.q]
    alpha = theta_raw[spec.q:].copy()
    alpha[0] -= 1.0
    theta = np.concatenate([beta, alpha])
    resid_norm = float(np.sqrt(sigma2 * (spec.n_rows - spec.np_params)))
    return SysIdModel(
        spec=spec, theta=theta, sigma2=float(sigma2),
        sample_rate_hz=ts.sample_rate_hz,
        fit_diagnostics=_diag(resid_norm, method, precision, factors))


def _diag(resid_norm: float, method: QrMethod, precision: Precision,
          factors) -> dict:
    return {
        "residual_norm": resid_norm,
        "qr_method": method.value,
        "precision": precision.value,
        "qr_flops": factors.stats.get("flops", 0),
        "qr_barriers": factors.stats.get("barriers", 0),
    }
