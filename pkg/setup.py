from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; boostlab._fallback is used at import
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "boostlab._kernels",
                ["src/boostlab/_kernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
