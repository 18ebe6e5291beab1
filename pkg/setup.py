"""Build script for the optional compiled kernels.

The package works without them; ``saarb._kernels`` falls back to numpy
implementations when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("SAARB_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "saarb._kernels._ckernels",
                    ["src/saarb/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    language="c++",
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
