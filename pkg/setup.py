import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fall back to the pure-Python kernels
    ext_modules = []
else:
    ext_modules = cythonize(
        Extension(
            "fracskellam._kernels",
            ["src/fracskellam/_kernels.pyx"],
            include_dirs=[np.get_include()],
        ),
        language_level=3,
    )

setup(ext_modules=ext_modules)
