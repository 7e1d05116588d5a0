"""Architecture search for recurrent forecasting networks.

Searches fixed-length integer encodings of stacked-LSTM architectures with a
forest-surrogate Bayesian loop, scores candidates without training via random
weight sampling, and trains the winner with Adam truncated through time.
"""

from .bo import BoConfig, BoResult, Strategy, expected_improvement, run
from .encoding import Architecture, Genotype, Scheme, SearchSpace, decode, is_feasible, penalty
from .mrs import MrsResult, OutputActivation, SupervisedSet, WeightSet, mrs, truncated_normal_prob
from .surrogate import ForestConfig, ForestModel
from .trainer import TrainConfig, TrainReport, mape, time_comparison, train

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "BoConfig",
    "BoResult",
    "ForestConfig",
    "ForestModel",
    "Genotype",
    "MrsResult",
    "OutputActivation",
    "Scheme",
    "SearchSpace",
    "Strategy",
    "SupervisedSet",
    "TrainConfig",
    "TrainReport",
    "WeightSet",
    "decode",
    "expected_improvement",
    "is_feasible",
    "mape",
    "mrs",
    "penalty",
    "run",
    "time_comparison",
    "train",
    "truncated_normal_prob",
]
