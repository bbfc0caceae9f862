"""Exact branch-and-price-and-cut for bi-level EV charging-station placement."""
from .bpc import BpcResult, run_bpc
from .config import InstanceConfig, load_config, parse_config
from .expand import expand_graph
from .kernels import BACKEND as KERNEL_BACKEND
from .mtap import FlowSolution, solve_mtap, upper_level_value
from .network import DemandTable, Link, PhysicalNetwork, load_instance
from .oracle import brute_force_optimum

__version__ = "0.1.0"

__all__ = [
    "BpcResult", "DemandTable", "FlowSolution", "InstanceConfig", "KERNEL_BACKEND", "Link",
    "PhysicalNetwork", "brute_force_optimum", "expand_graph", "load_config", "load_instance",
    "parse_config", "run_bpc", "solve_mtap", "upper_level_value",
]
