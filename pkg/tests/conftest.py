import numpy as np
import pytest

from sidspec import ModelKind, ModelSpec, RegressionProblem

SIZES = {"light": (200, 8), "medium": (480, 16), "heavy": (2520, 56)}


def random_tall(rng, n_rows, n_cols, dtype=np.float64):
    """Well-conditioned random tall matrix."""
    a = rng.standard_normal((n_rows, n_cols))
    return np.ascontiguousarray(a, dtype=dtype)


def hand_problem(psi, s_vec):
    """Wrap explicit arrays in a RegressionProblem with a matching spec."""
    psi = np.asarray(psi, dtype=np.float64)
    s_vec = np.asarray(s_vec, dtype=np.float64)
    n, np_cols = psi.shape
    spec = ModelSpec(kind=ModelKind.AR, q=np_cols - 1, n_rows=n)
    return RegressionProblem(psi=np.ascontiguousarray(psi),
                             s_vec=np.ascontiguousarray(s_vec), spec=spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240210)
