"""Multi-agent bandit simulations with free-riding players."""
from .bandits import ContextualBandit, StochasticBandit, gap, induced_stochastic
from .distributions import (
    Bernoulli,
    DiscreteFeature,
    DiscretePoints,
    PointMass,
    PointMassFeature,
    ShiftedMixture,
    SphericalGaussian,
    contextual_mean,
    dist_mean,
    shift_toward_one,
)
from .engine import MetricOptions, PlayerSpec, SimulationConfig, run_replicas
from .freeride import Visibility

__all__ = [
    "Bernoulli", "ContextualBandit", "DiscreteFeature", "DiscretePoints", "MetricOptions", "PlayerSpec",
    "PointMass", "PointMassFeature", "ShiftedMixture", "SimulationConfig", "SphericalGaussian",
    "StochasticBandit", "Visibility", "contextual_mean", "dist_mean", "gap", "induced_stochastic",
    "run_replicas", "shift_toward_one",
]
__version__ = "0.1.0"
