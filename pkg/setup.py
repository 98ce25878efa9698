"""Build hook for the optional compiled kernels.

The package works without them; a failed compile falls back to the
pure-Python kernels at import time.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("KAMLATTICE_NO_EXT", "") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "kamlattice._ckernels",
                    ["src/kamlattice/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"kamlattice: building without compiled kernels ({exc})")
        ext_modules = []

setup(ext_modules=ext_modules)
