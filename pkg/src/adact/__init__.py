"""Multilayer perceptrons with trainable piecewise-linear activations."""
from .activations import ActivationBank, HingeGrid, PiecewiseLinearActivation, init_from_reference, init_hinges
from .burden import BurdenInput, burden
from .data import Dataset, crossval, gen_rosenbrock, gen_sine, load_csv
from .estimator import AdActClassifier, AdActRegressor
from .network import MlpNetwork, forward, init_network
from .ols import solve_via_ols
from .trainers import TrainConfig, TrainRun, predict, train

__all__ = [
    "ActivationBank",
    "AdActClassifier",
    "AdActRegressor",
    "BurdenInput",
    "Dataset",
    "HingeGrid",
    "MlpNetwork",
    "PiecewiseLinearActivation",
    "TrainConfig",
    "TrainRun",
    "burden",
    "crossval",
    "forward",
    "gen_rosenbrock",
    "gen_sine",
    "init_from_reference",
    "init_hinges",
    "init_network",
    "load_csv",
    "predict",
    "solve_via_ols",
    "train",
]
