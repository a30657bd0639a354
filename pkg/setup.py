"""Build the optional compiled kernel.

The package works without it; ``nhformation.kernels`` falls back to the
pure-Python implementation when the extension is missing.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("NHFORMATION_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "nhformation._kernels",
                    ["src/nhformation/_kernels.pyx"],
                    # no FMA contraction and no sin+cos -> sincos fusion: keeps results
                    # bit-identical to the Python fallback
                    extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math", "-fno-builtin"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
