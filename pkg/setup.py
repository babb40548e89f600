from setuptools import Extension, setup

# The compiled kernels are optional: without Cython (or a working compiler)
# the package falls back to the NumPy implementations at import time.
try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "dci._kernels",
                ["src/dci/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
