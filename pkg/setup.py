"""Build script for the optional compiled kinematics/dynamics kernels.

The package works without the extension (a NumPy fallback is selected at
import time); the extension just makes the 100 Hz simulation loop fast.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "trocardock.kernels._fastkin",
                ["src/trocardock/kernels/_fastkin.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython at build time: install pure-Python only.
    pass

setup(ext_modules=ext_modules)
