"""Build script for the optional compiled empirical-likelihood kernel.

The package is fully functional without the extension: a vectorized NumPy
implementation of the same kernel is selected at import time when the
compiled module is absent. Building the extension just makes the per-grid
Lagrange solves much faster inside Monte Carlo loops.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "elcheck._accel._elcore",
                ["src/elcheck/_accel/_elcore.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
