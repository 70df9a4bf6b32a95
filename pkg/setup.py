"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy/scipy fallback is selected
at import time), so a failed compile only costs speed.  Set NILPERC_NO_EXT=1
to skip the extension build entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("NILPERC_NO_EXT"):
    try:
        from Cython.Build import cythonize
        import numpy

        ext_modules = cythonize(
            ["src/nilpercolate/_kernels/_core.pyx"],
            language_level=3,
        )
        for ext in ext_modules:
            ext.include_dirs.append(numpy.get_include())
    except Exception as exc:  # pragma: no cover - build-env dependent
        print(f"nilpercolate: skipping compiled kernels ({exc!r})")
        ext_modules = []

setup(ext_modules=ext_modules)
