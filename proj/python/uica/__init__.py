"""Cycle-level throughput prediction for basic blocks on Intel Core pipelines.

The heavy lifting lives in the _uica extension module; this package adds
data-file discovery for the bundled microarchitecture configs and
instruction tables.
"""

import os

try:
    from uica._uica import *  # noqa: F401,F403  (installed wheel layout)
    from uica import _uica as _ext
except ImportError:  # build-tree layout: the extension sits on sys.path
    from _uica import *  # noqa: F401,F403
    import _uica as _ext

__all__ = [
    "load_instr_table", "load_config", "parse_block", "simulate",
    "make_loop_variant", "filter_benchmark", "block_stats",
    "baseline_unroll", "baseline_loop", "mape", "kendall_tau",
    "data_dir", "load_arch", "analyze",
]


def data_dir():
    """Directory holding configs/ and tables/ (package data, then
    UICA_DATA_DIR, then the build-time source path)."""
    here = os.path.join(os.path.dirname(__file__), "data")
    if os.path.isdir(os.path.join(here, "configs")):
        return here
    env = os.environ.get("UICA_DATA_DIR")
    if env:
        return env
    return _ext.default_data_dir()


def load_arch(name, data=None):
    """Bundled (table, config) pair for a microarchitecture name."""
    base = data or data_dir()
    table = _ext.load_instr_table(os.path.join(base, "tables", name + ".tbl"))
    config = _ext.load_config(os.path.join(base, "configs", name + ".cfg"))
    return table, config


def analyze(listing, arch, mode="auto", align=0, data=None):
    """Parse a block listing and predict its throughput on `arch`."""
    table, config = load_arch(arch, data)
    block = _ext.parse_block(listing, table, align)
    return _ext.simulate(block, table, config, mode=mode, align=align)
