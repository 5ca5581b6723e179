"""Build script.

The compiled recursion kernel is optional: set CARKOV_NO_EXT=1 (or install
without Cython) to skip it, in which case the package falls back to a pure
numpy implementation at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CARKOV_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "carkov._kernels._recursion",
                    ["src/carkov/_kernels/_recursion.pyx"],
                )
            ],
            language_level="3",
        )

setup(ext_modules=ext_modules)
