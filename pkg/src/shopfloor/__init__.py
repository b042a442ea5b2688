"""shopfloor: an extended job-shop scheduling engine.

Batch sizes, sequence-dependent setups, transport times, buffer capacities
and deadlines on top of the classic job shop, exposed as a deterministic
decision environment with heuristic, exact and reinforcement-learning
schedulers, an independent schedule validator, and a planning service.
"""

from .env import Action, EnvFeatures, Observation, RewardConfig, ShopEnv, rollout
from .instances import GenSpec, generate_instance, paper_instance, parse_instance
from .model import Instance, Job, Machine, Operation, total_processing_time

__version__ = "0.1.0"

__all__ = [
    "Action",
    "EnvFeatures",
    "GenSpec",
    "Instance",
    "Job",
    "Machine",
    "Observation",
    "Operation",
    "RewardConfig",
    "ShopEnv",
    "generate_instance",
    "paper_instance",
    "parse_instance",
    "rollout",
    "total_processing_time",
    "__version__",
]
