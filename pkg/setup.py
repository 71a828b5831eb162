"""Build script: compiles the DTW extension when Cython and a C compiler
are available.  The extension is optional; batwatch falls back to the
NumPy kernel at import time if the build is skipped or fails."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "batwatch.cluster._dtw_cy",
                ["src/batwatch/cluster/_dtw_cy.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
