"""Build the optional Cython kernel.

If Cython or a C compiler is missing the package still installs and
``quadbell.kernels`` falls back to numpy.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "quadbell._kernels",
                ["src/quadbell/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        quiet=True,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
