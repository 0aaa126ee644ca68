"""Build script for the optional compiled integrator kernels.

The package is fully functional without the extension: fastslow.integrate
falls back to the pure-Python backend if `fastslow.integrate._kernels` is
missing (see fastslow/integrate/backend.py).  Build with

    pip install -e . --no-build-isolation
"""

import os

from setuptools import Extension, setup

try:
    if not os.path.exists("src/fastslow/integrate/_kernels.pyx"):
        raise ImportError("kernel source not present")
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fastslow.integrate._kernels",
                ["src/fastslow/integrate/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
