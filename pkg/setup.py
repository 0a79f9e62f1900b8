"""Build the optional Cython kernels.

The extension is marked optional: if it fails to compile the package still
installs and ``elghp`` falls back to the pure-Python kernels at import.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: ship the fallback only
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "elghp._kernels",
                ["src/elghp/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
