import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; shuffled._pycore is used instead
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("SHUFFLED_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "shuffled._core",
                ["src/shuffled/_core.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: results must match the Python fallback bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
