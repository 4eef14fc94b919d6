"""Build script for the optional compiled simulation kernels.

The extension is marked optional: when Cython or a C compiler is missing the
package still installs and falls back to the pure-Python kernels.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "punitive._ckernels",
                ["src/punitive/_ckernels.pyx"],
                extra_compile_args=["-O2", "-ffp-contract=off"],
                optional=True,
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
