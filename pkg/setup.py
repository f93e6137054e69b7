import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps the compiled kernel free of fused multiply-adds so
# it reproduces the numpy fallback's rounding.
extensions = [
    Extension(
        "levicool.dynamics._kernel",
        ["src/levicool/dynamics/_kernel.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        optional=True,
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
