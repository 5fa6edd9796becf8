"""Hyperband and SuccessiveHalving with synthetic bandit simulators and budget oracles."""

from hyperband.baselines import random_search, uniform_allocation
from hyperband.evaluator import (
    FAILED,
    ArmFactory,
    ArmState,
    BudgetExceeded,
    BudgetLedger,
    HyperbandError,
    LossOracle,
    ReplayOracle,
    RungFailed,
    TrialFailed,
    TrialLog,
    evaluate_rung,
    load_replay,
    top_k,
)
from hyperband.hyperband import (
    BracketPlan,
    HyperbandParams,
    Trajectory,
    compute_brackets,
    hyperband_finite_theoretical,
    hyperband_infinite,
    hyperband_practical,
)
from hyperband.niab import (
    SimulatorOracle,
    TheoryInstance,
    make_adversarial_instance,
    make_envelope_arm,
    make_stochastic_arm,
)
from hyperband.search_space import SearchSpace, builtin_space, load_space, parse_space, sample, validate
from hyperband.sha import (
    RungSchedule,
    ShaResult,
    rung_schedule,
    sha_finite_theoretical,
    sha_infinite,
    sha_practical,
)
from hyperband.trainer import SubprocessOracle

__version__ = "0.1.0"
