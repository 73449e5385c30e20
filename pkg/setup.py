from setuptools import setup, Extension
from Cython.Build import cythonize

extensions = [
    Extension(
        name="veclidar._kernels_c",
        sources=["src/veclidar/_kernels_c.pyx"],
        language="c",
    ),
]

setup(ext_modules=cythonize(extensions, language_level=3))
