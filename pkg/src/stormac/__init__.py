"""Tabular actor-critic laboratory: exact oracles, a STORM-momentum critic with a
replay window, a plain actor-critic baseline, and per-iterate diagnostics."""
from .baseline import train_baseline
from .buffer import ReplayBuffer, drift_bound_check, window_size
from .diagnostics import DiagnosticsRecord, aggregate, fit_rate, snapshot
from .errors import (
    DivergenceError,
    FitError,
    NumericError,
    ParameterError,
    StateError,
    StormacError,
)
from .mdp import TabularMdp, load_mdp, random_mdp, save_mdp, softmax_policy
from .oracles import (
    advantage,
    bellman_operator,
    exact_gradient,
    gradient_domination_check,
    occupancy,
    optimal_return,
    policy_return,
    q_function,
    value_function,
)
from .sampling import RngStream, Transition, sample_occupancy_state
from .storm import StepSchedules, train

__version__ = "0.1.0"
