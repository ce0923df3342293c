from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

sources = [
    "bindings/module.cpp",
    "src/tensor.cpp",
    "src/layers.cpp",
    "src/network.cpp",
    "src/model_io.cpp",
    "src/lrp.cpp",
    "src/gradients.cpp",
    "src/trainer.cpp",
    "src/dataset.cpp",
    "src/image_io.cpp",
    "src/render.cpp",
    "src/occlusion.cpp",
    "src/toy.cpp",
    "src/cli.cpp",
]

ext = Pybind11Extension(
    "relmap._core",
    sources,
    include_dirs=["include", "vendor"],
    libraries=["png", "z"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
