"""Build script: compiles the optional kernel extension when possible.

The package works without the extension (a NumPy fallback ships alongside),
so any build failure degrades to a pure-Python install instead of aborting.
Set RVPANOPTIC_PURE_PYTHON=1 to skip the extension outright.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or broken
            print(f"skipping compiled kernels: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"skipping {ext.name}: {exc}")


def extensions():
    if os.environ.get("RVPANOPTIC_PURE_PYTHON"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension("rvpanoptic._kernels", ["src/rvpanoptic/_kernels.pyx"],
                    extra_compile_args=["-O3"])
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
