"""Build script for the optional compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); building it is strongly recommended for realistic solve rates.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "morphonmpc._core.kernels_c",
        sources=["src/morphonmpc/_core/kernels_c.pyx"],
        include_dirs=[np.get_include()],
        # -O3 only: no -ffast-math, bitwise reproducibility matters more
        # than the last few percent here.
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=(
        cythonize(extensions, compiler_directives={"language_level": "3"})
        if cythonize is not None
        else []
    ),
)
