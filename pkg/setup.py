"""Build script: compiles the optional accelerator extension.

The extension is a performance add-on only.  If Cython or a C compiler is
unavailable the build degrades to the pure-Python backend, which produces
bit-identical results (see linksched.kernels).

Floating-point flags matter here: the compiled loops must round exactly like
the numpy fallback, so fused multiply-add contraction and fast-math are
disabled.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Try to build the accelerator; fall back to pure Python on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"linksched: skipping compiled core ({exc!r}); "
                  "pure-Python backend will be used", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"linksched: failed to build {ext.name} ({exc!r}); "
                  "pure-Python backend will be used", file=sys.stderr)


if sys.platform == "win32":
    _fp_flags = []
else:
    _fp_flags = ["-O2", "-ffp-contract=off"]

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "linksched._core",
                ["src/linksched/_core.pyx"],
                extra_compile_args=_fp_flags,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
