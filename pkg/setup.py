import sys

from setuptools import Extension, setup

# The compiled kernels are an optional speedup: the package falls back to the
# numpy implementations in hullplan.hull._kernels_py when the extension is
# missing, so a failed cythonize must not block installation.
ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext = Extension(
        "hullplan.hull._kernels",
        ["src/hullplan/hull/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off: the compiled kernels must produce bit-identical
        # results to the numpy fallback, so fused multiply-add is disabled.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover
    print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
