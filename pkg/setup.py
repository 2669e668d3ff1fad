"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure NumPy/Python backend is
selected at import time), so a failed compile degrades to a warning
instead of aborting the install.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


def make_extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        warnings.warn(f"compiled kernels skipped ({exc}); using the pure Python backend")
        return []
    ext = Extension(
        "lobhawkes._backend._kernels",
        ["src/lobhawkes/_backend/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    # No -ffast-math: the simulation loop must stay bit-reproducible against
    # the pure backend, which relies on strict IEEE semantics.
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


class optional_build_ext(build_ext):
    """Compile the kernels if possible, fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn(f"compiled kernels unavailable ({exc}); using the pure Python backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"failed to build {ext.name} ({exc}); using the pure Python backend")


setup(ext_modules=make_extensions(), cmdclass={"build_ext": optional_build_ext})
