"""Gossip-based distributed Kalman filtering over sensor networks.

Library layout:

- ``model``     plant, sensors, communication graph, gossip plan
- ``gossip``    randomized pairwise-averaging protocol and its spectrum
- ``filters``   centralized / decentralized / consensus estimator family
- ``analysis``  stacked error system, expected covariance map, fixed points
- ``scheduler`` power-constrained sensor-connection selection
- ``sim``       Monte-Carlo experiment engine and tracking metrics
- ``scenario``  config file parsing, ``cli`` + ``report`` the front end
"""

from .errors import (
    DivergenceError,
    GossipKFError,
    NumericalError,
    ScenarioParseError,
    UnschedulableNodeError,
    ValidationError,
)
from .model import (
    GossipPlan,
    SensorModel,
    StateModel,
    Topology,
    build_uniform_gossip_plan,
    symmetrize,
    validate_topology,
)
from .scenario import example1_path, parse_budget, parse_scenario
from .sim import MetricSeries, ScenarioConfig, monte_carlo, run_experiment

__version__ = "0.1.0"

__all__ = [
    "DivergenceError",
    "GossipKFError",
    "GossipPlan",
    "MetricSeries",
    "NumericalError",
    "ScenarioConfig",
    "ScenarioParseError",
    "SensorModel",
    "StateModel",
    "Topology",
    "UnschedulableNodeError",
    "ValidationError",
    "build_uniform_gossip_plan",
    "example1_path",
    "monte_carlo",
    "parse_budget",
    "parse_scenario",
    "run_experiment",
    "symmetrize",
    "validate_topology",
    "__version__",
]
