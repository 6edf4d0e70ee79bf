"""Double-precision golden implementations and synthetic generators.

Deliberately boring and maximally independent of the main pipeline: the
least-squares oracle goes through the normal equations with a Cholesky
solve (never QR), the spectral sanity check is a nonparametric averaged
periodogram, and the generators use a counter-based PRNG (numpy Philox,
algorithm id "philox4x64") so fixtures regenerate identically anywhere.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import (NumericalError, SignalTooShortError,
                     UnstableCoefficientsError, ValidationError)
from .model import (ModelKind, ModelSpec, RegressionProblem, TimeSeries,
                    build_ar_regression, build_arma_stage2_regression)
from .spectrum import Spectrum, frequency_grid
from .sysid import SysIdModel, _ar_predict_residuals

PRNG_ALGORITHM = "philox4x64"


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def normal_equations_solve(prob: RegressionProblem):
    """Brute-force float64 least squares via Cholesky on Psi^T Psi.

    Returns (theta, sigma2) with the same meaning as the QR pipeline's
    solve_regression.
    """
    psi = np.asarray(prob.psi, dtype=np.float64)
    s = np.asarray(prob.s_vec, dtype=np.float64)
    gram = psi.T @ psi
    try:
        chol = scipy.linalg.cho_factor(gram, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"normal equations not positive definite: {exc}") \
            from None
    theta = scipy.linalg.cho_solve(chol, psi.T @ s)
    resid = s - psi @ theta
    n, np_ = psi.shape
    sigma2 = float(resid @ resid) / (n - np_)
    return theta, sigma2


def fit_oracle(ts: TimeSeries, spec: ModelSpec) -> SysIdModel:
    """Full float64 pipeline fit using the normal-equations oracle.

    Mirrors sysid.fit (including the ARMA two-stage procedure and the
    coefficient sign convention) but never touches the QR kernels.
    """
    if spec.kind is ModelKind.AR:
        prob = build_ar_regression(ts, spec, dtype=np.float64)
        theta_raw, sigma2 = normal_equations_solve(prob)
        theta = -theta_raw
    else:
        if spec.p == 0:
            raise ValidationError("ARMA with p = 0 aliases AR")
        s1 = spec.stage1_order
        stage1 = ModelSpec(kind=ModelKind.AR, q=s1 - 1, n_rows=spec.n_rows)
        theta1_raw, _ = normal_equations_solve(
            build_ar_regression(ts, stage1, dtype=np.float64))
        residuals = _ar_predict_residuals(ts.samples, -theta1_raw)
        prob = build_arma_stage2_regression(ts, residuals, spec,
                                            dtype=np.float64)
        theta_raw, sigma2 = normal_equations_solve(prob)
        beta = -theta_raw[:spec.q]
        alpha = theta_raw[spec.q:].copy()
        alpha[0] -= 1.0
        theta = np.concatenate([beta, alpha])
    return SysIdModel(spec=spec, theta=theta, sigma2=sigma2,
                      sample_rate_hz=ts.sample_rate_hz,
                      fit_diagnostics={"qr_method": "normal-equations",
                                       "precision": "f64"})


def check_stable(coeffs: np.ndarray) -> None:
    """Reject monic AR polynomials with roots on or outside the unit circle."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.size == 0:
        return
    roots = np.roots(np.concatenate(([1.0], coeffs)))
    if roots.size and np.max(np.abs(roots)) >= 1.0 - 1e-9:
        raise UnstableCoefficientsError(
            f"pole magnitude {np.max(np.abs(roots)):.6f} >= 1")


def gen_ar_process(coeffs, sigma: float, n: int, seed: int,
                   sample_rate_hz: float = 100.0) -> TimeSeries:
    """Reproducible realization of s[k] = -sum_i coeffs_i s[k-i] + e[k].

    ``coeffs`` follow the monic left-hand-side convention (same as fitted
    theta).  A burn-in of 10x the order is generated and discarded.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    check_stable(coeffs)
    order = coeffs.shape[0]
    burn = 10 * order
    rng = _rng(seed)
    noise = rng.normal(0.0, sigma, size=n + burn)
    if order == 0:
        return TimeSeries(samples=noise[burn:], sample_rate_hz=sample_rate_hz)
    x = scipy.signal.lfilter([1.0], np.concatenate(([1.0], coeffs)), noise)
    return TimeSeries(samples=x[burn:], sample_rate_hz=sample_rate_hz)


def gen_arma_process(beta, alpha, sigma: float, n: int, seed: int,
                     sample_rate_hz: float = 100.0) -> TimeSeries:
    """Reproducible ARMA realization.

    Follows s[k] = -sum beta_i s[k-i] + e[k] + sum_{s=0..p} alpha_s e[k-s]
    (note the lag-0 noise term carries 1 + alpha_0).
    """
    beta = np.asarray(beta, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    check_stable(beta)
    order = max(beta.shape[0], alpha.shape[0])
    burn = 10 * max(order, 1)
    rng = _rng(seed)
    noise = rng.normal(0.0, sigma, size=n + burn)
    ma = np.concatenate(([1.0 + (alpha[0] if alpha.size else 0.0)],
                         alpha[1:]))
    x = scipy.signal.lfilter(ma, np.concatenate(([1.0], beta)), noise)
    return TimeSeries(samples=x[burn:], sample_rate_hz=sample_rate_hz)


def gen_pole_pair_ar2(freq_hz: float, radius: float,
                      sample_rate_hz: float) -> np.ndarray:
    """Monic AR(2) coefficients with a conjugate pole pair at freq_hz."""
    if not (0.0 < radius < 1.0):
        raise ValidationError("pole radius must lie in (0, 1)")
    w = 2.0 * np.pi * freq_hz / sample_rate_hz
    return np.array([-2.0 * radius * np.cos(w), radius * radius])


def fft_psd_check(ts: TimeSeries, l: int) -> Spectrum:
    """Averaged-periodogram estimate resampled onto the analytic grid.

    Test-only sanity oracle: parametric peaks should co-locate with the
    nonparametric ones to within a couple of bins.
    """
    n = len(ts)
    if n < 4 * l:
        nperseg = n // 2
    else:
        nperseg = 2 * l
    if nperseg < 8:
        raise SignalTooShortError("signal too short for a periodogram check")
    freqs, pxx = scipy.signal.welch(ts.samples, fs=ts.sample_rate_hz,
                                    nperseg=nperseg, nfft=2 * l,
                                    detrend=False)
    # welch's one-sided grid is k*fs/(2l) for k = 0..l; keep the first l
    psd = np.maximum(pxx[:l], 0.0)
    return Spectrum(psd=psd, freqs=frequency_grid(l, ts.sample_rate_hz),
                    sample_rate_hz=ts.sample_rate_hz)
