"""Build script: compiles the optional combat turn-loop extension.

The package works without the extension (a pure-Python turn loop is
selected at import time); any build failure here downgrades to a
source-only install instead of aborting.
"""
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "questforge._turnloop",
        ["src/questforge/_turnloop.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class optional_build_ext(build_ext):
    """Swallow compiler failures so the pure-Python fallback still installs."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: skipping compiled turn loop ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: {ext.name} not compiled ({exc})", file=sys.stderr)


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
