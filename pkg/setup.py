"""Build script for the optional compiled iteration kernels.

The package works without the extension (a pure-Python loop is selected at
import time), so a missing compiler or Cython only costs speed, not features.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("PINVFREE_NO_EXT", "0") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "pinvfree._iterloop",
                    ["src/pinvfree/_iterloop.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
