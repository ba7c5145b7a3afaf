import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fall back to the pure-Python core
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("BWALK_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "bwalk._simcore",
                ["src/bwalk/_simcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
