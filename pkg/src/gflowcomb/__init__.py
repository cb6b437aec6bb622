"""GFlowNet policies for graph combinatorial optimization."""

from .autodiff import Tensor, backward, no_grad
from .env import State, StepResult, Task
from .generators import GenSpec, gen_ba, gen_dataset, gen_er, gen_rb
from .graphs import Graph, complement
from .losses import (LogZParam, Trajectory, TransitionRecord, db_loss,
                     fl_loss, tb_loss, trajectory_loss)
from .nn import GinConfig, PolicyModel, gin_forward, load_checkpoint, save_checkpoint
from .optim import Adam
from .oracle import (ExactBalancedModel, ExactDistribution, ExactResult,
                     brute_force_optimum, exact_terminal_distribution, greedy,
                     target_distribution, tv_distance)
from .training import TrainConfig, rollout, sample_best_of_k, train

__all__ = [
    "Adam", "ExactBalancedModel", "ExactDistribution", "ExactResult",
    "GenSpec", "GinConfig", "Graph", "LogZParam", "PolicyModel", "State",
    "StepResult", "Task", "Tensor", "TrainConfig", "Trajectory",
    "TransitionRecord", "backward", "brute_force_optimum", "complement",
    "db_loss", "exact_terminal_distribution", "fl_loss", "gen_ba",
    "gen_dataset", "gen_er", "gen_rb", "gin_forward", "greedy",
    "load_checkpoint", "no_grad", "rollout", "sample_best_of_k",
    "save_checkpoint", "target_distribution", "tb_loss", "train",
    "trajectory_loss", "tv_distance",
]
