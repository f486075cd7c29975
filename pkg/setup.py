from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    # Strict IEEE double arithmetic is required: the compiled kernel must be
    # bit-identical to the pure-Python one, so no -ffast-math / -Ofast.
    extensions = cythonize(
        [
            Extension(
                "fpnc._kernel_c",
                ["src/fpnc/_kernel_c.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    extensions = []

setup(ext_modules=extensions)
