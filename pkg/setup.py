import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

setup(ext_modules=cythonize(
    [
        Extension(
            "todalab._scan",
            ["src/todalab/_scan.pyx"],
            extra_compile_args=["-O3"],
            include_dirs=[numpy.get_include()],
        )
    ],
    language_level=3,
))
