"""Build script for the optional compiled kernel extension.

The package works without the extension: ``xaicross._kernels`` falls back to
a NumPy implementation at import time. Building the extension just makes the
tree-routing hot loops (batch prediction, coalition and permutation scans)
much faster. Run ``python setup.py build_ext --inplace`` for a dev checkout.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "xaicross._kernels._core",
                ["src/xaicross/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
