"""Build script for the compiled kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import Extension, setup


def make_extensions():
    import numpy
    from Cython.Build import cythonize

    openmp_arg = "/openmp" if sys.platform.startswith("win") else "-fopenmp"
    ext = Extension(
        "sidspec._kernels",
        ["src/sidspec/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", openmp_arg] if openmp_arg != "/openmp" else [openmp_arg],
        extra_link_args=[openmp_arg],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


try:
    extensions = make_extensions()
except Exception as exc:  # pragma: no cover - depends on toolchain
    sys.stderr.write(f"warning: compiled kernels skipped ({exc}); "
                     "pure-python backend will be used\n")
    extensions = []

setup(ext_modules=extensions)
