import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = cythonize(
    [
        Extension(
            "lpsf._kernels.cykernels",
            ["src/lpsf/_kernels/cykernels.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            # -fcx-limited-range: complex multiplies lower to the plain
            # (ac - bd, ad + bc) formula instead of the __muldc3 libcall;
            # operands here are always finite
            extra_compile_args=["-O3", "-fcx-limited-range"],
        )
    ],
    language_level=3,
)

setup(ext_modules=extensions)
