"""Build hook for the optional C edit-distance kernel.

The package works without it: rnnverify._native falls back to the pure
Python implementation when the compiled module is absent.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "rnnverify._editdist",
                ["src/rnnverify/_editdist.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
