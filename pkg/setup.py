"""Build script.  Compiles the native similarity kernels when Cython and a C
toolchain are available; the package falls back to the numpy kernels otherwise.

Set JOBCORPUS_SKIP_NATIVE=1 to force a pure-Python build.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("JOBCORPUS_SKIP_NATIVE"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "jobcorpus._kernels._native",
                    ["src/jobcorpus/_kernels/_native.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
