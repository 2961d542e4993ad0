"""Domain types, arm sampling, loss estimation and regret bookkeeping.

Arms are 0-based everywhere in the library. Human-facing reports label them
1..d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, InvalidState

SIMPLEX_TOL = 1e-10


def as_simplex_point(weights, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate a probability vector and return it as a float64 array."""
    x = np.asarray(weights, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise InvalidArgument("a simplex point needs a 1-d vector with d >= 1 entries")
    if not np.all(np.isfinite(x)):
        raise InvalidArgument("simplex point has non-finite weights")
    if np.any(x < 0):
        raise InvalidArgument("simplex point has negative weights")
    if abs(x.sum() - 1.0) > tol:
        raise InvalidArgument(f"weights sum to {x.sum()!r}, not 1")
    return x


def uniform_point(d: int) -> np.ndarray:
    if d < 1:
        raise InvalidArgument("d must be >= 1")
    return np.full(d, 1.0 / d)


def lambda_schedule(t: int, G: float) -> float:
    """Regularization weight 4 G sqrt(t) used at round t."""
    if t < 1 or int(t) != t:
        raise InvalidArgument(f"round must be a positive integer, got {t!r}")
    if not G > 0:
        raise InvalidArgument(f"scale G must be positive, got {G!r}")
    return 4.0 * G * math.sqrt(t)


# Tsallis-1/2 potential psi(x) = -sum sqrt(x_i). The round-t regularizer is
# lambda_t * psi, so gradient and Hessian below carry the lambda factor.

def tsallis_potential(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return -float(np.sqrt(x).sum())


def regularizer(x, lam: float) -> float:
    return lam * tsallis_potential(x)


def regularizer_gradient(x, lam: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return -lam / (2.0 * np.sqrt(x))


def regularizer_hessian_diag(x, lam: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return lam / (4.0 * x**1.5)


def ftrl_objective(x, L, lam: float) -> float:
    """<L, x> - lam * sum sqrt(x_i), the function minimized over the simplex."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.dot(L, x) - lam * np.sqrt(x).sum())


@dataclass(frozen=True)
class EstimateVector:
    estimates: np.ndarray
    chosen_arm: int


def importance_weighted_estimate(loss_of_chosen: float, chosen_arm: int, x) -> EstimateVector:
    """Importance-weighted loss estimate: loss / x[arm] on the chosen arm, 0 elsewhere.

    Raises ZeroDivisionError if the chosen arm had zero probability.
    """
    x = np.asarray(x, dtype=np.float64)
    if not 0 <= chosen_arm < x.size:
        raise InvalidArgument(f"arm {chosen_arm} out of range for d={x.size}")
    if loss_of_chosen < 0:
        raise InvalidArgument("losses must be nonnegative")
    p = x[chosen_arm]
    if p == 0:
        raise ZeroDivisionError(f"arm {chosen_arm} was drawn with probability 0")
    est = np.zeros(x.size)
    est[chosen_arm] = loss_of_chosen / p
    return EstimateVector(est, int(chosen_arm))


def draw_arm(x, rng: np.random.Generator) -> int:
    """Inverse-CDF draw of an arm index with Pr[i] = x[i].

    Consumes exactly one uniform from ``rng``. Zero-weight arms are never
    returned.
    """
    cums = np.cumsum(np.asarray(x, dtype=np.float64))
    u = rng.random() * cums[-1]
    return int(np.searchsorted(cums, u, side="right"))


def draw_arms(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise version of :func:`draw_arm` given pre-drawn uniforms."""
    cums = np.cumsum(x, axis=1)
    v = u * cums[:, -1]
    return (cums <= v[:, None]).sum(axis=1)


@dataclass(frozen=True)
class GapProfile:
    means: np.ndarray
    best_mean: float
    gaps: np.ndarray

    @classmethod
    def from_means(cls, means: Sequence[float]) -> "GapProfile":
        m = np.asarray(means, dtype=np.float64)
        if m.ndim != 1 or m.size < 1:
            raise InvalidArgument("need at least one arm mean")
        best = float(m.min())
        return cls(m, best, m - best)

    @property
    def n_arms(self) -> int:
        return self.means.size

    @property
    def unique_best(self) -> bool:
        return int(np.count_nonzero(self.gaps == 0)) == 1

    @property
    def best_arm(self) -> int:
        return int(np.argmin(self.means))


def pseudo_regret_from_pulls(pull_counts, profile: GapProfile) -> float:
    """Per-run realization of sum_i S_i * gap_i; its mean over runs is the pseudo-regret."""
    s = np.asarray(pull_counts, dtype=np.float64)
    if s.shape != profile.gaps.shape:
        raise InvalidArgument(
            f"pull_counts has {s.size} entries, profile has {profile.n_arms} arms")
    return float(np.dot(s, profile.gaps))


@dataclass
class Trajectory:
    """Per-round record of one episode.

    Row t of each array is round t+1. ``estimates`` holds the dense
    estimate vectors; at most one entry per row is nonzero.
    """
    horizon: int
    iterates: np.ndarray
    arms: np.ndarray
    true_losses: np.ndarray
    estimates: np.ndarray
    pull_counts: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.pull_counts is None:
            d = self.iterates.shape[1]
            self.pull_counts = np.bincount(self.arms, minlength=d).astype(np.int64)
        if int(self.pull_counts.sum()) != len(self.arms):
            raise InvalidState("pull counts do not match recorded rounds")

    @property
    def n_rounds(self) -> int:
        return len(self.arms)

    @property
    def complete(self) -> bool:
        return self.n_rounds == self.horizon

    def estimate(self, t: int) -> EstimateVector:
        """Estimate of round t (1-based, as in the algorithm's loop)."""
        return EstimateVector(self.estimates[t - 1], int(self.arms[t - 1]))

    def incurred_losses(self) -> np.ndarray:
        return self.true_losses[np.arange(self.n_rounds), self.arms]


def realized_regret(trajectory: Trajectory) -> float:
    """Incurred loss minus the loss of the best fixed arm in hindsight."""
    if not trajectory.complete:
        raise InvalidState(
            f"trajectory has {trajectory.n_rounds} of {trajectory.horizon} rounds")
    incurred = float(trajectory.incurred_losses().sum())
    best = float(trajectory.true_losses.sum(axis=0).min())
    return incurred - best
