"""Build script: compiles the optional Cython stepping kernels.

The package works without the extension (a pure NumPy fallback is selected at
import time), so any build failure here downgrades to a warning instead of
aborting the install.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError as exc:
        warnings.warn(f"native kernels skipped ({exc}); using the pure Python stepper")
        return []
    return cythonize(
        [
            Extension(
                "longrun_npc.kernels._native",
                ["src/longrun_npc/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )


class optional_build_ext(build_ext):
    """Treat extension build failures as non-fatal."""

    def run(self):
        try:
            super().run()
        except (PlatformError, FileNotFoundError) as exc:
            warnings.warn(f"native kernels skipped ({exc}); using the pure Python stepper")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except (CCompilerError, ExecError, PlatformError, ValueError) as exc:
            warnings.warn(f"native kernels skipped ({exc}); using the pure Python stepper")


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
