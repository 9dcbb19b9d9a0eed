"""Build script: compiles the optional Cython solver kernels.

The compiled extension is a pure accelerator. If Cython or a C compiler is
unavailable the build falls through to a pure-Python install and the package
selects the NumPy kernels at import time.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        print("priorcut: Cython not available, skipping compiled kernels", file=sys.stderr)
        return []
    ext = Extension(
        "priorcut._kernels._solve_cy",
        ["src/priorcut/_kernels/_solve_cy.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level="3")


class optional_build_ext(build_ext):
    """Swallow compiler failures so the pure-Python fallback still installs."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain
            print(f"priorcut: compiled kernels skipped ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"priorcut: building {ext.name} failed ({exc}), using pure-Python kernels",
                  file=sys.stderr)


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
