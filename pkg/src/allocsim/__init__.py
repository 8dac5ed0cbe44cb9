"""Multi-process resource-allocation simulator with a learning agent.

Public surface: suite definitions and validation (:mod:`allocsim.model`),
the step/reset simulation engine with its observation encodings
(:mod:`allocsim.engine`), a from-scratch dense Q-network
(:mod:`allocsim.neural`), the double-Q training loop (:mod:`allocsim.dqn`),
FIFO/SPT dispatch baselines (:mod:`allocsim.baselines`) and the
``allocsim`` command-line harness (:mod:`allocsim.cli`).
"""

from .baselines import fifo_action, spt_action
from .cli import default_suite_path
from .dqn import DqnConfig, ReplayMemory, TrainingRun, compute_targets, epsilon_at, evaluate, select_action, train
from .engine import Assign, Engine, EngineConfig, PrivilegedView
from .model import (
    BusinessProcess,
    BusinessProcessSuite,
    EligibilityMap,
    Task,
    TaskTransition,
    ValidationReport,
    load_suite,
    load_suite_path,
    sample_duration,
    sample_next_task,
    serialize_suite,
    validate_suite,
)
from .neural import NetworkParams, OptimizerState, clone_params, copy_into, forward, init_params, load_params, save_params, train_step

__version__ = "0.1.0"
