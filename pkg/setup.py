"""Build script for the optional compiled kernel.

The package works without the extension (a pure-Python kernel with
identical semantics is selected at import time), so a missing Cython
is downgraded to a source-only install rather than a hard failure.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "cubemorph._kernels._fast",
        sources=["src/cubemorph/_kernels/_fast.pyx"],
    )
]

if cythonize is not None:
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
else:
    ext_modules = []

setup(ext_modules=ext_modules)
