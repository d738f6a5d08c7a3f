import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "sdyang._ckernels",
        ["src/sdyang/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-fno-math-errno"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
