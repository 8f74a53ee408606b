import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "finslerlab._kernels_cy",
                ["src/finslerlab/_kernels_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: the package still works on the numpy kernels.
    ext_modules = []

setup(ext_modules=ext_modules)
