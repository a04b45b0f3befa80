import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ANAVI_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "anavi._kernels",
                    ["src/anavi/_kernels.pyx"],
                    # no contraction/fast-math: keeps results bit-identical to the Python fallback
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
