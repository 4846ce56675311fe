"""Build script: compiles the optional Cython kernel extension.

If Cython or a C compiler is unavailable the package still installs; the
solvers fall back to the pure-Python kernels at import time.
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
                "frontlab._kernels",
                ["src/frontlab/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: no fused multiply-add, so results stay
                # bit-identical to the pure-Python kernels
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
