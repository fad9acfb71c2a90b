"""Max-flow network interdiction with restructuring (MFNIP-R)."""

from .ccg import CcgConfig, CcgResult, solve, solve_mfnip
from .instance import Instance, load, save
from .netgen import GenParams, generate
from .network import LayeredNetwork, NodeRecord, ValidationError, max_flow, split_nodes
from .restructure import InterdictionPlan, RestructurePlan, RestructureRules

__version__ = "0.1.0"

__all__ = [
    "CcgConfig",
    "CcgResult",
    "GenParams",
    "Instance",
    "InterdictionPlan",
    "LayeredNetwork",
    "NodeRecord",
    "RestructurePlan",
    "RestructureRules",
    "ValidationError",
    "generate",
    "load",
    "max_flow",
    "save",
    "solve",
    "solve_mfnip",
    "split_nodes",
]
