"""Build the optional Cython kernel core.

The package is fully functional without the extension (a pure NumPy/Python
fallback with identical semantics is selected at import time); the extension
only makes the hot kernels fast. -ffp-contract=off keeps C arithmetic
bit-identical to the Python fallback (no FMA contraction).
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        [
            Extension(
                "phycov._backend._ckernels",
                sources=["src/phycov/_backend/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
