import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("D2DSCHED_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "d2dsched.kernels._interference",
                    ["src/d2dsched/kernels/_interference.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # no Cython at build time: the pure-NumPy kernel is used at runtime
        ext_modules = []

setup(ext_modules=ext_modules)
