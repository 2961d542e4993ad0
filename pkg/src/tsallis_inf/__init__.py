"""Tsallis-INF: FTRL with the Tsallis-1/2 regularizer for multi-armed bandits."""
from .core import (EstimateVector, GapProfile, Trajectory, draw_arm,
                   importance_weighted_estimate, lambda_schedule, pseudo_regret_from_pulls,
                   realized_regret, tsallis_potential)
from .environments import (AdversarialSpec, StochasticSpec, adversarial_round,
                           load_loss_matrix, sample_stochastic_round)
from .harness import (RegretSummary, RunConfig, adversarial_bound, baseline_uniform,
                      emit_report, monte_carlo, run_episode, stochastic_bound)
from .solver import (DualSolveResult, FtrlState, TsallisINF, ftrl_argmin, ftrl_update,
                     kkt_residual, next_iterate)

__version__ = "0.1.0"
