"""Build hook for the optional compiled Viterbi kernel.

The package is fully functional without compilation (a NumPy fallback is
selected at import time); when Cython and a C compiler are present the
extension is built for faster decoding.
"""

from setuptools import Extension, setup


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension("emergent.kernels._viterbi", ["src/emergent/kernels/_viterbi.pyx"])],
        language_level=3,
    )


setup(ext_modules=_extensions())
