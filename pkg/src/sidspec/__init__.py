"""sidspec: output-only system identification of vibration time series
and spectral damage detection.

Pipeline: build a lagged regression from the signal, solve it by
economy-size QR (Givens, Gram-Schmidt, or Householder; float32 or
float64), synthesize the power spectral density analytically from the
fitted coefficients, and compare spectral peaks between a healthy and a
test recording.  Hot kernels run in a compiled extension with a
pure-numpy fallback selected at import; all parallel execution is
deterministic (bitwise-identical results for any worker count).
"""

from ._backend import available_backends, backend_name
from .detect import (DamageReport, DetectConfig, Peak, PeakSet, assess,
                     find_peaks, isd, match_peaks)
from .footprint import (ResourceEstimate, estimate_pipeline_bytes,
                        estimate_qr_footprint)
from .model import (ModelKind, ModelSpec, RegressionProblem, TimeSeries,
                    build_ar_regression, build_arma_stage2_regression)
from .oracle import (fft_psd_check, fit_oracle, gen_ar_process,
                     gen_arma_process, gen_pole_pair_ar2,
                     normal_equations_solve)
from .parallel import (ExecContext, PartitionMode, default_context,
                       map_reduce, parallel_for, partition)
from .qr import (QrFactors, back_substitution, factorize, givens_qr,
                 gram_schmidt_qr, householder_qr)
from .qrmethod import Precision, QrMethod
from .spectrum import (Spectrum, TrigTable, frequency_grid, psd_ar,
                       psd_arma, psd_of, psd_value, trig_lookup)
from .sysid import SysIdModel, fit, solve_regression

__version__ = "0.1.0"

__all__ = [
    "DamageReport", "DetectConfig", "ExecContext", "ModelKind", "ModelSpec",
    "PartitionMode", "Peak", "PeakSet", "Precision", "QrFactors", "QrMethod",
    "RegressionProblem", "ResourceEstimate", "Spectrum", "SysIdModel",
    "TimeSeries", "TrigTable", "assess", "available_backends",
    "back_substitution", "backend_name", "build_ar_regression",
    "build_arma_stage2_regression", "default_context",
    "estimate_pipeline_bytes", "estimate_qr_footprint", "factorize",
    "fft_psd_check", "find_peaks", "fit", "fit_oracle", "frequency_grid",
    "gen_ar_process", "gen_arma_process", "gen_pole_pair_ar2", "givens_qr",
    "gram_schmidt_qr", "householder_qr", "isd", "map_reduce", "match_peaks",
    "normal_equations_solve", "parallel_for", "partition", "psd_ar",
    "psd_arma", "psd_of", "psd_value", "solve_regression", "trig_lookup",
    "__version__",
]
