import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "betalab._sturm",
        ["src/betalab/_sturm.pyx"],
        include_dirs=[np.get_include(), "src/betalab"],
        # no FMA contraction: the numpy fallback must match bit for bit
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
