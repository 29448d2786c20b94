"""Build script: compiles the optional rating-replay kernel.

The package works without the compiled extension (a pure-Python fallback
is selected at import time); the kernel only speeds up the replay loop
that dominates grid-search runtime.
"""

from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
    import numpy as np

    extensions = cythonize(
        [
            Extension(
                "handicap_lab._replay_cy",
                ["src/handicap_lab/_replay_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
