"""Shared enums for factorization method and element precision."""

from __future__ import annotations

import enum

import numpy as np


class QrMethod(enum.Enum):
    GIVENS = "givens"
    GRAM_SCHMIDT = "gs"
    HOUSEHOLDER = "hh"

    @classmethod
    def parse(cls, name: str) -> "QrMethod":
        aliases = {
            "givens": cls.GIVENS, "gr": cls.GIVENS,
            "gs": cls.GRAM_SCHMIDT, "gram-schmidt": cls.GRAM_SCHMIDT,
            "gram_schmidt": cls.GRAM_SCHMIDT,
            "hh": cls.HOUSEHOLDER, "householder": cls.HOUSEHOLDER,
        }
        try:
            return aliases[name.lower()]
        except KeyError:
            raise ValueError(f"unknown QR method {name!r}") from None


class Precision(enum.Enum):
    F32 = "f32"
    F64 = "f64"

    @classmethod
    def parse(cls, name: str) -> "Precision":
        try:
            return {"f32": cls.F32, "f64": cls.F64,
                    "float32": cls.F32, "float64": cls.F64}[name.lower()]
        except KeyError:
            raise ValueError(f"unknown precision {name!r}") from None

    @classmethod
    def of_dtype(cls, dtype) -> "Precision":
        dtype = np.dtype(dtype)
        if dtype == np.float32:
            return cls.F32
        if dtype == np.float64:
            return cls.F64
        raise ValueError(f"unsupported dtype {dtype}")

    @property
    def dtype(self):
        return np.float32 if self is Precision.F32 else np.float64

    @property
    def eps(self) -> float:
        return float(np.finfo(self.dtype).eps)

    @property
    def ortho_tol(self) -> float:
        return 1e-4 if self is Precision.F32 else 1e-10
