"""Static loop partitioning, barriers, and deterministic reductions.

All parallel work in the package flows through the contract defined here:
a range is split into a *fixed* number of contiguous logical partitions
(independent of how many OS threads execute them), partial results are
combined sequentially in ascending partition order, and every fork implies
a barrier at exit.  Because the partition boundaries and the combine order
never depend on the worker count, floating-point results are bitwise
identical for any ``worker_count``.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import OverlappingWriteError

#: Fixed number of logical partitions; physical workers are multiplexed
#: onto these, so results do not depend on worker_count.
LOGICAL_PARTITIONS = 8

THREADS_ENV_VAR = "SIDSPEC_THREADS"


class PartitionMode(enum.Enum):
    STATIC = "static"


@dataclass
class ExecStats:
    """Mutable counters accumulated across kernel invocations."""

    flops: int = 0
    barriers: int = 0

    def add(self, flops: int = 0, barriers: int = 0) -> None:
        self.flops += flops
        self.barriers += barriers


@dataclass(frozen=True)
class ExecContext:
    worker_count: int = 1
    partition_mode: PartitionMode = PartitionMode.STATIC
    deterministic: bool = True
    logical_partitions: int = LOGICAL_PARTITIONS
    stats: ExecStats = field(default_factory=ExecStats)

    def __post_init__(self):
        if self.worker_count < 1:
            raise ValueError(f"worker_count must be >= 1, got {self.worker_count}")
        if self.logical_partitions < 1:
            raise ValueError("logical_partitions must be >= 1")


def default_context() -> ExecContext:
    """Context with worker_count taken from the environment (default 1)."""
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        workers = max(1, int(raw))
    except ValueError:
        workers = 1
    return ExecContext(worker_count=workers)


def partition(range_len: int, workers: int) -> list[tuple[int, int]]:
    """Split ``range(range_len)`` into ``workers`` contiguous sub-ranges.

    Sizes differ by at most one; when ``range_len < workers`` the trailing
    sub-ranges are empty.  The boundaries are a pure function of the
    arguments, which is what makes partitioned reductions reproducible.
    """
    if range_len < 0:
        raise ValueError("range_len must be >= 0")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    base, rem = divmod(range_len, workers)
    out = []
    for i in range(workers):
        start = i * base + min(i, rem)
        stop = start + base + (1 if i < rem else 0)
        out.append((start, stop))
    return out


def _run_partitions(ctx: ExecContext, tasks):
    """Run callables over partitions, then barrier (join) before returning."""
    if ctx.worker_count == 1 or len(tasks) <= 1:
        results = [t() for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=min(ctx.worker_count, len(tasks))) as pool:
            results = list(pool.map(lambda t: t(), tasks))
    ctx.stats.add(barriers=1)
    return results


def parallel_for(ctx: ExecContext, range_len: int, body, debug: bool = False) -> None:
    """Execute ``body(start, stop)`` over the logical partitions.

    ``body`` must only write locations belonging to its own sub-range
    (disjoint-write contract).  A barrier is implied at exit.  In debug
    mode each body must return the iterable of indices it wrote; the
    claims are checked for containment and mutual disjointness.
    """
    parts = partition(range_len, ctx.logical_partitions)
    tasks = [(lambda s=s, e=e: body(s, e)) for s, e in parts]
    results = _run_partitions(ctx, tasks)
    if debug:
        seen: set[int] = set()
        for (start, stop), written in zip(parts, results):
            written = set() if written is None else set(written)
            if any(i < start or i >= stop for i in written):
                raise OverlappingWriteError(
                    f"body for range [{start},{stop}) wrote outside it: "
                    f"{sorted(i for i in written if i < start or i >= stop)}")
            if seen & written:
                raise OverlappingWriteError(
                    f"index written by two partitions: {sorted(seen & written)}")
            seen |= written


def map_reduce(ctx: ExecContext, range_len: int, map_fn, combine):
    """Compute per-partition partials in parallel, combine them in order.

    ``map_fn(start, stop)`` produces a partial for one sub-range (it must
    return its identity element for an empty range).  Partials are folded
    with ``combine`` strictly in ascending partition order, so the result
    is independent of the worker count.
    """
    parts = partition(range_len, ctx.logical_partitions)
    tasks = [(lambda s=s, e=e: map_fn(s, e)) for s, e in parts]
    partials = _run_partitions(ctx, tasks)
    acc = partials[0]
    for p in partials[1:]:
        acc = combine(acc, p)
    return acc
