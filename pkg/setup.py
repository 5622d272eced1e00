"""Build script for the compiled SGD kernel.

The extension is optional: if Cython or a C compiler is unavailable the
package installs anyway and falls back to the pure-numpy kernel at import
time (see fluidlab.linear._backend).
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing: install without the kernel
            print(f"warning: skipping compiled SGD kernel ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping {ext.name} ({exc})")


def make_extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "fluidlab.linear._sgd_kernel",
                ["src/fluidlab/linear/_sgd_kernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=make_extensions(), cmdclass={"build_ext": OptionalBuildExt})
