import os

from setuptools import setup

ext_modules = []
if os.environ.get("MTCODE_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            Extension(
                "mtcode._ckernels",
                ["src/mtcode/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            ),
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        # no Cython/numpy at build time: the numpy fallback is used at import
        ext_modules = []

setup(ext_modules=ext_modules)
