import shutil
from pathlib import Path

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

ROOT = Path(__file__).parent

# bundle the data files with the package
src_data = ROOT / "data"
pkg_data = ROOT / "python" / "uica" / "data"
if src_data.is_dir():
    if pkg_data.exists():
        shutil.rmtree(pkg_data)
    shutil.copytree(src_data, pkg_data,
                    ignore=shutil.ignore_patterns("__pycache__"))

core_sources = [
    "src/record_file.cpp",
    "src/registers.cpp",
    "src/isa.cpp",
    "src/uarch.cpp",
    "src/block.cpp",
    "src/program.cpp",
    "src/frontend.cpp",
    "src/backend.cpp",
    "src/sim.cpp",
    "src/eval.cpp",
    "src/py/module.cpp",
]

ext = Pybind11Extension(
    "uica._uica",
    sources=core_sources,
    include_dirs=["include", "vendor"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
