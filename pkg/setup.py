"""Build the optional Cython kernels.

Without Cython (or a C compiler) the package installs as pure Python and
``mrpr.kernels`` falls back to ``mrpr._kernels_py``.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("mrpr._ckernels", ["src/mrpr/_ckernels.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
