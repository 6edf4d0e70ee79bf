"""Analytic memory and flop-count estimators for the QR kernels.

The working-storage and complexity expressions form the planning model the
rest of the package is checked against: measured kernel allocations must
stay within ``estimate_qr_footprint`` (plus slack), and
``estimate_pipeline_bytes`` gives the end-to-end footprint of one solve
at a given element width.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DimensionError
from .qrmethod import QrMethod


@dataclass(frozen=True)
class ResourceEstimate:
    working_words: int
    flops_estimate: float
    pipeline_bytes: int

    def __post_init__(self):
        if self.working_words < 0 or self.flops_estimate < 0 or self.pipeline_bytes < 0:
            raise ValueError("resource estimates must be non-negative")


def estimate_qr_footprint(method: QrMethod, n: int, np_cols: int,
                          elem_bytes: int = 4) -> ResourceEstimate:
    """Working storage (in elements) and complexity model for one QR kernel.

    ``n`` is the row count, ``np_cols`` the column count of the input.
    """
    if not (n >= np_cols >= 1):
        raise DimensionError(f"need n >= np >= 1, got {n}x{np_cols}")
    if method is QrMethod.GIVENS:
        words = 2 * n * np_cols + 4 * n
        flops = (6.0 * np_cols * n * n - np_cols**3) / 3.0
    elif method is QrMethod.GRAM_SCHMIDT:
        words = 2 * n * np_cols + np_cols * np_cols
        flops = float(np_cols) * n * n
    elif method is QrMethod.HOUSEHOLDER:
        words = np_cols + n + 5 * n * np_cols + n * n
        flops = (6.0 * np_cols**2 * n**2 + float(n) ** 4 - 4.0 * np_cols * n**3) / 12.0
    else:  # pragma: no cover
        raise ValueError(f"unknown method {method}")
    return ResourceEstimate(
        working_words=words,
        flops_estimate=flops,
        pipeline_bytes=estimate_pipeline_bytes(n, np_cols, elem_bytes),
    )


def estimate_pipeline_bytes(n: int, np_cols: int, elem_bytes: int) -> int:
    """End-to-end solve footprint: regression matrix + Q + R + target + theta."""
    if not (n >= np_cols >= 1):
        raise DimensionError(f"need n >= np >= 1, got {n}x{np_cols}")
    if elem_bytes < 1:
        raise DimensionError("elem_bytes must be >= 1")
    words = 2 * n * np_cols + np_cols * np_cols + n + np_cols
    return words * elem_bytes
