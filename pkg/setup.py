"""Build script: compiles the tridiagonal eigensolver kernels when Cython and
a C toolchain are available; otherwise the package falls back to the pure
NumPy twin in ncgopt._kernels_py at import time."""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ncgopt._kernels_cy",
                sources=["src/ncgopt/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    import sys

    print(f"ncgopt: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
