import numpy as np
import pytest

from sidspec import ExecContext, map_reduce, parallel_for, partition
from sidspec.errors import OverlappingWriteError
from sidspec.parallel import LOGICAL_PARTITIONS


class TestPartition:
    def test_balanced_contiguous(self):
        assert partition(10, 4) == [(0, 3), (3, 6), (6, 8), (8, 10)]

    def test_narrow_iteration_space(self):
        parts = partition(5, 8)
        assert parts[:5] == [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]
        assert parts[5:] == [(5, 5), (5, 5), (5, 5)]

    def test_empty_range(self):
        assert partition(0, 4) == [(0, 0)] * 4

    def test_cover_and_disjoint(self, rng):
        for _ in range(50):
            n = int(rng.integers(0, 1000))
            w = int(rng.integers(1, 16))
            parts = partition(n, w)
            assert parts[0][0] == 0
            assert parts[-1][1] == n
            for (a0, a1), (b0, b1) in zip(parts, parts[1:]):
                assert a1 == b0
                assert a1 - a0 >= 0
            sizes = [b - a for a, b in parts]
            assert max(sizes) - min(sizes) <= 1


class TestMapReduce:
    @pytest.mark.parametrize("workers", [1, 2, 4, 8])
    def test_integer_sum(self, workers):
        ctx = ExecContext(worker_count=workers)
        total = map_reduce(ctx, 100,
                           lambda s, e: sum(range(s + 1, e + 1)),
                           lambda a, b: a + b)
        assert total == 5050

    def test_float_dot_bitwise_across_workers(self, rng):
        x = rng.standard_normal(10007)
        y = rng.standard_normal(10007)
        vals = []
        for w in (1, 2, 4, 8):
            ctx = ExecContext(worker_count=w)
            v = map_reduce(ctx, x.shape[0],
                           lambda s, e: float(x[s:e] @ y[s:e]),
                           lambda a, b: a + b)
            vals.append(v)
        assert len({v.hex() for v in vals}) == 1

    def test_empty_range(self):
        ctx = ExecContext(worker_count=4)
        assert map_reduce(ctx, 0, lambda s, e: 0.0, lambda a, b: a + b) == 0.0

    def test_barrier_counted(self):
        ctx = ExecContext(worker_count=2)
        before = ctx.stats.barriers
        map_reduce(ctx, 10, lambda s, e: e - s, lambda a, b: a + b)
        assert ctx.stats.barriers == before + 1


class TestParallelFor:
    @pytest.mark.parametrize("workers", [1, 2, 8])
    def test_disjoint_writes_visible_at_exit(self, workers, rng):
        n = 1003
        src = rng.standard_normal(n)
        dst = np.zeros(n)

        def body(s, e):
            dst[s:e] = 2.0 * src[s:e]

        parallel_for(ExecContext(worker_count=workers), n, body)
        assert np.array_equal(dst, 2.0 * src)

    def test_debug_accepts_disjoint(self):
        out = np.zeros(20)

        def body(s, e):
            out[s:e] = 1.0
            return range(s, e)

        parallel_for(ExecContext(worker_count=2), 20, body, debug=True)

    def test_debug_detects_out_of_range_write(self):
        def body(s, e):
            return [0]  # every partition claims index 0

        with pytest.raises(OverlappingWriteError):
            parallel_for(ExecContext(worker_count=2), 20, body, debug=True)


class TestExecContext:
    def test_validates_worker_count(self):
        with pytest.raises(ValueError):
            ExecContext(worker_count=0)

    def test_fixed_logical_partitions(self):
        assert ExecContext(worker_count=3).logical_partitions == \
            LOGICAL_PARTITIONS

    def test_deterministic_flag_default(self):
        assert ExecContext().deterministic is True


class TestKernelDeterminism:
    def test_qt_dot_matches_single_thread(self, rng):
        from sidspec._backend import kernels
        q = np.ascontiguousarray(rng.standard_normal((480, 16)))
        s = np.ascontiguousarray(rng.standard_normal(480))
        ref, _ = kernels.qt_dot(q, s, 1)
        for w in (2, 4, 8):
            out, _ = kernels.qt_dot(q, s, w)
            assert out.tobytes() == ref.tobytes()

    def test_residual_sumsq_across_workers(self, rng):
        from sidspec._backend import kernels
        psi = np.ascontiguousarray(rng.standard_normal((480, 16)))
        theta = np.ascontiguousarray(rng.standard_normal(16))
        s = np.ascontiguousarray(rng.standard_normal(480))
        vals = {kernels.residual_sumsq(psi, theta, s, w)[0].hex()
                for w in (1, 2, 4, 8)}
        assert len(vals) == 1


class TestBarrierAccounting:
    def test_gs_pipeline_count_stable(self):
        from sidspec import (ExecContext, ModelKind, ModelSpec, Precision,
                             QrMethod, fit, gen_ar_process)
        ts = gen_ar_process([-1.2, 0.5], 1.0, 600, seed=2)
        spec = ModelSpec(kind=ModelKind.AR, q=15, n_rows=480)
        counts = []
        for _ in range(2):
            ctx = ExecContext(worker_count=2)
            fit(ts, spec, QrMethod.GRAM_SCHMIDT, Precision.F32, ctx)
            counts.append(ctx.stats.barriers)
        assert counts[0] == counts[1]
        assert counts[0] > 0


class TestEnvOverride:
    def test_default_context_reads_env(self, monkeypatch):
        from sidspec.parallel import THREADS_ENV_VAR, default_context
        monkeypatch.setenv(THREADS_ENV_VAR, "4")
        assert default_context().worker_count == 4
        monkeypatch.delenv(THREADS_ENV_VAR)
        assert default_context().worker_count == 1

    def test_cli_env_override(self, monkeypatch, tmp_path):
        from sidspec.cli import main
        from sidspec.parallel import THREADS_ENV_VAR
        fixture = tmp_path / "f.txt"
        assert main(["gen", str(fixture), "--coeffs=-0.5", "--n", "900",
                     "--seed", "1", "--rate", "50"]) == 0
        monkeypatch.setenv(THREADS_ENV_VAR, "2")
        out = tmp_path / "m.json"
        assert main(["fit", str(fixture), "-o", str(out), "--q", "3",
                     "--n-rows", "480"]) == 0
