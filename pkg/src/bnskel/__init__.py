"""Skeleton learning for discrete Bayesian networks via block l1/l2 regression."""

from .encoding import BlockIndexMap, codebook, encode_design
from .errors import BnskelError, NotConverged, ValidationError
from .experiments import SweepConfig, learn_skeleton, run_sweep
from .lasso import Problem, fit, lambda_schedule
from .metrics import assemble_skeleton, score
from .network import CategoricalNetwork, Node, Skeleton, generate_network, load_network, save_network
from .sampler import SampleMatrix, ancestral_sample
from .theory import theory_report

__version__ = "0.1.0"

__all__ = [
    "BlockIndexMap",
    "BnskelError",
    "CategoricalNetwork",
    "Node",
    "NotConverged",
    "Problem",
    "SampleMatrix",
    "Skeleton",
    "SweepConfig",
    "ValidationError",
    "ancestral_sample",
    "assemble_skeleton",
    "codebook",
    "encode_design",
    "fit",
    "generate_network",
    "lambda_schedule",
    "learn_skeleton",
    "load_network",
    "run_sweep",
    "save_network",
    "score",
    "theory_report",
]
