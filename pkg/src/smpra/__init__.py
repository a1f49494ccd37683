"""Sparse message passing estimation of preamble choices in crowded random access."""
from .kernels import BACKEND
from .model import Instance, SystemConfig, generate_instance
from .smp import EstimateResult, SmpParams, run_smp

__all__ = ["BACKEND", "EstimateResult", "Instance", "SmpParams", "SystemConfig",
           "generate_instance", "run_smp"]
__version__ = "0.1.0"
