"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: vinesim.kernels
falls back to the pure-Python implementation at import time. The
extension is marked optional so a missing compiler never breaks install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    # Bit-identical math with the pure-Python kernels is required for
    # replay-log compatibility between backends: no FMA contraction and no
    # sin/cos -> sincos fusion (glibc sincos rounds differently).
    extensions = cythonize(
        [
            Extension(
                "vinesim._speedups",
                ["src/vinesim/_speedups.pyx"],
                extra_compile_args=[
                    "-O3",
                    "-ffp-contract=off",
                    # keep sin/cos as plain libm calls: GCC otherwise fuses
                    # sin+cos pairs into sincos, which rounds differently
                    "-fno-builtin-sin",
                    "-fno-builtin-cos",
                    "-fno-builtin-sincos",
                ],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    extensions = []

setup(ext_modules=extensions)
