"""Build script for the optional compiled event-loop core.

The extension is marked optional: if it cannot be built, the package
installs anyway and falls back to the pure-Python kernels at import time.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "zrp._speedups",
                ["src/zrp/_speedups.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no FP contraction: trajectories must be bit-identical to
                # the pure-Python fallback
                extra_compile_args=["-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
