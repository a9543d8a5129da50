"""Sampling wide Bayesian neural networks with a data-dependent repriorisation of the readout layer."""

from .config import ExperimentConfig
from .model import Dataset, NetworkSpec
from .reprior import ReparamConfig, RepriorisedTarget, log_density_reparam, repriorise
from .sampler import LmcConfig, run_chain, run_chains

__all__ = [
    "Dataset",
    "ExperimentConfig",
    "LmcConfig",
    "NetworkSpec",
    "ReparamConfig",
    "RepriorisedTarget",
    "log_density_reparam",
    "repriorise",
    "run_chain",
    "run_chains",
]
__version__ = "0.1.0"
