import numpy as np
import pytest

from sidspec import (ModelKind, ModelSpec, TimeSeries, build_ar_regression,
                     build_arma_stage2_regression, gen_ar_process)
from sidspec.errors import (NonFiniteError, SignalTooShortError,
                            ValidationError)


def make_ts(samples, fs=100.0):
    return TimeSeries(samples=np.asarray(samples, dtype=np.float64),
                      sample_rate_hz=fs)


class TestTimeSeries:
    def test_validates_length(self):
        with pytest.raises(ValidationError):
            TimeSeries(samples=np.array([1.0]), sample_rate_hz=100.0)

    def test_validates_rate(self):
        with pytest.raises(ValidationError):
            make_ts([1.0, 2.0], fs=0.0)

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            make_ts([1.0, np.nan, 2.0])

    def test_rejects_inf(self):
        with pytest.raises(NonFiniteError):
            make_ts([1.0, np.inf, 2.0])


class TestModelSpec:
    def test_ar_param_count(self):
        spec = ModelSpec(kind=ModelKind.AR, q=7, n_rows=100)
        assert spec.np_params == 8

    def test_arma_param_count(self):
        spec = ModelSpec(kind=ModelKind.ARMA, q=10, p=5, n_rows=480)
        assert spec.np_params == 16

    def test_ar_requires_p_zero(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind=ModelKind.AR, q=2, p=1, n_rows=100)

    def test_rows_must_cover_params(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind=ModelKind.AR, q=9, n_rows=9)

    def test_solve_needs_strictly_more_rows(self):
        # n_rows == Np builds, but the variance denominator needs more
        import sidspec
        ts = TimeSeries(samples=np.arange(40.0) % 7 + np.linspace(0, 1, 40),
                        sample_rate_hz=10.0)
        spec = ModelSpec(kind=ModelKind.AR, q=1, n_rows=2)
        prob = build_ar_regression(ts, spec)
        with pytest.raises(ValidationError):
            sidspec.solve_regression(prob, sidspec.QrMethod.GRAM_SCHMIDT)

    def test_stage1_default(self):
        spec = ModelSpec(kind=ModelKind.ARMA, q=10, p=5, n_rows=480)
        assert spec.stage1_order == min(2 * 16, 480 // 4)

    def test_stage1_lower_bound(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind=ModelKind.ARMA, q=10, p=5, n_rows=480,
                      stage1_order=10)


class TestBuildAr:
    def test_documented_lag_convention(self):
        # s=[1..5], q=1 (two lags), three rows
        ts = make_ts([1, 2, 3, 4, 5])
        spec = ModelSpec(kind=ModelKind.AR, q=1, n_rows=3)
        prob = build_ar_regression(ts, spec)
        assert prob.s_vec.tolist() == [3, 4, 5]
        assert prob.psi.tolist() == [[2, 1], [3, 2], [4, 3]]

    def test_constant_signal_zero_residual(self):
        ts = make_ts(np.full(64, 3.5))
        spec = ModelSpec(kind=ModelKind.AR, q=2, n_rows=32)
        prob = build_ar_regression(ts, spec)
        theta, *_ = np.linalg.lstsq(prob.psi, prob.s_vec, rcond=None)
        resid = prob.s_vec - prob.psi @ theta
        assert np.abs(resid).max() < 1e-10

    def test_generator_recovery_normal_equations(self):
        # AR(2) data, two-lag regression; independent lstsq oracle
        ts = gen_ar_process([-1.5, 0.7], 1.0, 2000, seed=77)
        spec = ModelSpec(kind=ModelKind.AR, q=1, n_rows=400)
        prob = build_ar_regression(ts, spec)
        theta, *_ = np.linalg.lstsq(prob.psi, prob.s_vec, rcond=None)
        assert abs(-theta[0] - (-1.5)) < 0.05
        assert abs(-theta[1] - 0.7) < 0.05

    def test_shapes_property(self, rng):
        for _ in range(25):
            q = int(rng.integers(1, 6))
            n = int(rng.integers(q + 2, 60))
            extra = int(rng.integers(0, 20))
            length = n + q + 1 + extra
            ts = make_ts(rng.standard_normal(length))
            spec = ModelSpec(kind=ModelKind.AR, q=q, n_rows=n)
            prob = build_ar_regression(ts, spec)
            assert prob.psi.shape == (n, q + 1)
            assert prob.s_vec.shape == (n,)

    def test_shift_consistency(self, rng):
        samples = rng.standard_normal(80)
        spec = ModelSpec(kind=ModelKind.AR, q=3, n_rows=30)
        orig = build_ar_regression(make_ts(samples), spec)
        delayed = build_ar_regression(make_ts(samples[:-1]), spec)
        assert np.array_equal(delayed.psi[1:], orig.psi[:-1])
        assert np.array_equal(delayed.s_vec[1:], orig.s_vec[:-1])

    def test_bitwise_determinism(self, rng):
        samples = rng.standard_normal(100)
        spec = ModelSpec(kind=ModelKind.AR, q=4, n_rows=40)
        a = build_ar_regression(make_ts(samples), spec)
        b = build_ar_regression(make_ts(samples), spec)
        assert a.psi.tobytes() == b.psi.tobytes()
        assert a.s_vec.tobytes() == b.s_vec.tobytes()

    def test_too_short(self):
        ts = make_ts(np.arange(10.0))
        spec = ModelSpec(kind=ModelKind.AR, q=3, n_rows=8)
        with pytest.raises(SignalTooShortError):
            build_ar_regression(ts, spec)

    def test_wrong_kind(self):
        ts = make_ts(np.arange(100.0))
        spec = ModelSpec(kind=ModelKind.ARMA, q=2, p=1, n_rows=20,
                         stage1_order=8)
        with pytest.raises(ValidationError):
            build_ar_regression(ts, spec)


class TestBuildArmaStage2:
    def test_documented_example(self):
        ts = make_ts([1, 2, 3, 4])
        resid = np.array([0.1, 0.2, 0.3, 0.4])
        spec = ModelSpec(kind=ModelKind.ARMA, q=1, p=0, n_rows=2,
                         stage1_order=1)
        prob = build_arma_stage2_regression(ts, resid, spec)
        assert prob.s_vec.tolist() == [3, 4]
        assert np.allclose(prob.psi, [[2, 0.3], [3, 0.4]])

    def test_zero_residuals_zero_alpha_columns(self, rng):
        samples = rng.standard_normal(60)
        resid = np.zeros(60)
        spec = ModelSpec(kind=ModelKind.ARMA, q=2, p=1, n_rows=20,
                         stage1_order=4)
        prob = build_arma_stage2_regression(make_ts(samples), resid, spec)
        assert np.all(prob.psi[:, 2:] == 0.0)
        # minimum-norm tie-breaking puts nothing on the zero columns
        theta, *_ = np.linalg.lstsq(prob.psi, prob.s_vec, rcond=None)
        assert np.abs(theta[2:]).max() < 1e-12

    def test_warmup_excluded(self, rng):
        samples = rng.standard_normal(50)
        resid = np.full(50, np.nan)
        resid[30:] = 0.5
        spec = ModelSpec(kind=ModelKind.ARMA, q=1, p=1, n_rows=19,
                         stage1_order=2)
        prob = build_arma_stage2_regression(make_ts(samples), resid, spec)
        assert np.isfinite(prob.psi).all()
        with pytest.raises(SignalTooShortError):
            spec_big = ModelSpec(kind=ModelKind.ARMA, q=1, p=1, n_rows=20,
                                 stage1_order=2)
            build_arma_stage2_regression(make_ts(samples), resid, spec_big)

    def test_length_mismatch(self, rng):
        samples = rng.standard_normal(50)
        spec = ModelSpec(kind=ModelKind.ARMA, q=1, p=1, n_rows=10,
                         stage1_order=2)
        with pytest.raises(Exception):
            build_arma_stage2_regression(make_ts(samples), np.zeros(49), spec)
