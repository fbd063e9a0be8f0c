"""Build hook: compiles the optional speedup extension when a toolchain is present.

The package works without it; gridteam.kernels falls back to the numpy
implementation at import time. Set GRIDTEAM_NO_EXT=1 to skip compilation.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("GRIDTEAM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "gridteam._speedups",
                    ["src/gridteam/_speedups.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except Exception:
        ext_modules = []

setup(ext_modules=ext_modules)
