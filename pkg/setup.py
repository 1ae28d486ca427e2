import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: if Cython or a C compiler is missing the
# package installs anyway and klprox.kernels falls back to the numpy backend.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "klprox._kernels_c",
                ["src/klprox/_kernels_c.pyx"],
                include_dirs=[np.get_include()],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
