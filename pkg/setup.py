"""Build script: compiles the rank-statistic extension when Cython is present.

Set TRIAGEVAL_PURE_PYTHON=1 to skip the extension entirely; the package then
runs on the numpy fallback kernel selected at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("TRIAGEVAL_PURE_PYTHON") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "triageval._fastrank",
                    ["src/triageval/_fastrank.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
