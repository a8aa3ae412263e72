"""Fictitious play with extended-Kalman opponent tracking for cooperative action selection."""

from .exceptions import ConfigurationError, NotStartedError, NumericError
from .filters import (
    GaussianBelief,
    NoiseConfig,
    ekf_predict,
    ekf_update,
    softmax_jacobian,
    softmax_link,
)
from .game import (
    Game,
    best_response,
    enumerate_pure_nash,
    expected_reward,
    is_pure_nash,
    verify_exact_potential,
    wonderful_life_game,
    wonderful_life_utility,
)
from .learners import (
    ClassicFictitiousPlay,
    EKFFictitiousPlay,
    EKFOpponentModel,
    GreedyLearner,
    ParticleFictitiousPlay,
    PFOpponentModel,
    RandomLearner,
    make_learner,
)

__version__ = "0.1.0"
