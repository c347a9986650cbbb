from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; qwalk falls back to the numpy kernels
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "qwalk._kernels",
                ["src/qwalk/_kernels.pyx"],
                # keep a*b+c unfused so results match the numpy fallback bit-for-bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
