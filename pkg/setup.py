"""Build script.

The compiled score-accumulation kernel is optional: if Cython or a C
compiler is unavailable the install still succeeds and covertid.kernels
falls back to the numpy path at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "covertid._accel",
        sources=["src/covertid/_accel.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)
