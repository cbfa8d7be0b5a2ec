from .common import EpsilonSchedule, OuNoise, bellman_targets, continuous_targets, streams
from .ddpg import DDPGConfig, mddpg_train, to_env_action
from .dqn import DQNConfig, DQNResult, mdqn_train
from .fqi import FQIConfig, FQIResult, collect_dataset, fqi_run
from .transfer import TransferMode, run_transfer

__all__ = [
    "EpsilonSchedule", "OuNoise", "bellman_targets", "continuous_targets", "streams",
    "DDPGConfig", "mddpg_train", "to_env_action",
    "DQNConfig", "DQNResult", "mdqn_train",
    "FQIConfig", "FQIResult", "collect_dataset", "fqi_run",
    "TransferMode", "run_transfer",
]
