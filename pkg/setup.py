"""Build hook for the optional compiled kernel extension.

The package works without the extension: radarpursuit.backend falls back
to the vectorized numpy kernels when radarpursuit._kernels is missing.
"""
from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "radarpursuit._kernels",
                ["src/radarpursuit/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
