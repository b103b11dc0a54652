import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("AMPSI_NO_EXTENSION", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("ampsi._kernels", ["src/ampsi/_kernels.pyx"], extra_compile_args=["-O3"], optional=True)],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
