"""Build script for the optional compiled kernels.

The package works without the extension (a NumPy fallback is selected at
import time); building it just makes the p-variation and Chen-defect scans
much faster.  OpenMP is used when the toolchain supports it.
"""

import os

import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize


def _extensions():
    openmp = os.environ.get("ROUGH_LLG_NO_OPENMP") != "1"
    compile_args = ["-O3", "-funroll-loops"]
    link_args = []
    if os.environ.get("ROUGH_LLG_NO_NATIVE") != "1":
        compile_args.append("-march=native")
    if openmp:
        compile_args.append("-fopenmp")
        link_args.append("-fopenmp")
    ext = Extension(
        "rough_llg._kernels_cy",
        ["src/rough_llg/_kernels_cy.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        extra_link_args=link_args,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
