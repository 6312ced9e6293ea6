import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "haps_deploy.kernels._ray_cy",
                ["src/haps_deploy/kernels/_ray_cy.pyx"],
                include_dirs=[np.get_include()],
                # fp-contract off keeps hit decisions bit-identical to the
                # numpy fallback kernel.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-Python install still works; the ray kernel falls back at import.
    ext_modules = []

setup(ext_modules=ext_modules)
