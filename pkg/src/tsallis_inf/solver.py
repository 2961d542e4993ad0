"""FTRL iterate for the Tsallis-1/2 regularizer.

The iterate minimizes ``<L, x> - lam * sum_i sqrt(x_i)`` over the simplex.
Stationarity gives ``x_i(nu) = lam^2 / (4 (L_i + nu)^2)`` for the multiplier
``nu`` of the constraint ``sum x = 1``, so the whole problem reduces to the
scalar equation ``phi(nu) = sum_i x_i(nu) - 1 = 0``. ``phi`` is convex and
strictly decreasing on ``(-min L, inf)``, which makes safeguarded Newton
started left of the root monotone and quadratically convergent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EstimateVector, lambda_schedule
from .errors import InvalidArgument, NumericalFailure

MAX_ITER = 200
PHI_TOL = 1e-12
# accepted when Newton stalls at machine precision
STALL_TOL = 1e-10
MAX_EXPANSIONS = 64


@dataclass(frozen=True)
class DualSolveResult:
    iterate: np.ndarray
    dual_variable: float
    residual: float
    iterations: int


def _phi(Ls, nu, lam):
    w = (lam[:, None] / (2.0 * (Ls + nu[:, None]))) ** 2
    return w.sum(axis=1) - 1.0


def solve_dual(L, lam, tol: float = PHI_TOL, max_iter: int = MAX_ITER):
    """Row-wise solve for a batch of problems.

    ``L`` has shape (n, d); ``lam`` is a scalar or shape (n,). Returns
    ``(x, nu, residual, iterations)`` with ``nu`` expressed for the
    unshifted ``L``. Rows are independent: a row's result does not depend on
    the other rows in the batch.
    """
    L = np.atleast_2d(np.asarray(L, dtype=np.float64))
    n, d = L.shape
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), (n,)).copy()

    # shifting by min L leaves the argmin unchanged and keeps magnitudes small
    shift = L.min(axis=1)
    Ls = L - shift[:, None]

    # min-loss arm alone has weight >= 1 at lam/2; every weight is <= 1/d at lam*sqrt(d)/2
    lo = lam / 2.0
    hi = lam * math.sqrt(d) / 2.0
    for _ in range(MAX_EXPANSIONS):
        bad = _phi(Ls, lo, lam) < 0
        if not bad.any():
            break
        lo[bad] *= 0.5
    for _ in range(MAX_EXPANSIONS):
        bad = _phi(Ls, hi, lam) > 0
        if not bad.any():
            break
        hi[bad] *= 2.0
    else:
        raise NumericalFailure("could not bracket the dual root")

    nu = lo.copy()
    iters = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    for k in range(1, max_iter + 1):
        nu_a = nu[active]
        lam_a = lam[active]
        z = Ls[active] + nu_a[:, None]
        w = (lam_a[:, None] / (2.0 * z)) ** 2
        phi = w.sum(axis=1) - 1.0
        dphi = -2.0 * (w / z).sum(axis=1)
        iters[active] = k

        pos = phi > 0
        lo_a = np.where(pos, nu_a, lo[active])
        hi_a = np.where(pos, hi[active], nu_a)
        lo[active] = lo_a
        hi[active] = hi_a

        step = nu_a - phi / dphi
        outside = ~((step > lo_a) & (step < hi_a))
        step = np.where(outside, 0.5 * (lo_a + hi_a), step)
        stalled = step == nu_a

        done = np.abs(phi) <= tol
        if stalled.any():
            fail = stalled & ~done & (np.abs(phi) > STALL_TOL)
            if fail.any():
                row = int(active[np.flatnonzero(fail)[0]])
                raise NumericalFailure(
                    f"dual solve stalled on row {row} with |phi|={abs(phi[fail][0]):.3e}", row)
            done |= stalled
        nu[active] = np.where(done, nu_a, step)
        active = active[~done]
        if active.size == 0:
            break
    else:
        raise NumericalFailure(
            f"dual solve did not converge in {max_iter} iterations "
            f"({active.size} rows left)", int(active[0]))

    x = (lam[:, None] / (2.0 * (Ls + nu[:, None]))) ** 2
    residual = np.abs(x.sum(axis=1) - 1.0)
    return x, nu - shift, residual, iters


def ftrl_argmin(L, lam: float) -> DualSolveResult:
    """Minimize ``<L, x> - lam * sum sqrt(x_i)`` over the probability simplex."""
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 1 or L.size < 1:
        raise InvalidArgument("L must be a vector with at least one entry")
    if not np.all(np.isfinite(L)):
        raise InvalidArgument("L has non-finite entries")
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidArgument(f"lambda must be positive and finite, got {lam!r}")
    x, nu, res, it = solve_dual(L[None, :], lam)
    return DualSolveResult(x[0], float(nu[0]), float(res[0]), int(it[0]))


def kkt_residual(x, L, lam: float) -> float:
    """Spread of ``L_i - lam / (2 sqrt(x_i))`` across arms; zero at the optimum."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise InvalidArgument("kkt_residual needs a strictly interior point")
    g = np.asarray(L, dtype=np.float64) - lam / (2.0 * np.sqrt(x))
    return float(g.max() - g.min())


@dataclass(frozen=True)
class FtrlState:
    """Running sum of estimates before ``round``, plus the loss scale G."""
    cumulative_estimates: np.ndarray
    round: int
    scale: float

    @classmethod
    def fresh(cls, d: int, scale: float) -> "FtrlState":
        if d < 1:
            raise InvalidArgument("d must be >= 1")
        if not scale > 0:
            raise InvalidArgument("scale G must be positive")
        return cls(np.zeros(d), 1, float(scale))

    @property
    def n_arms(self) -> int:
        return self.cumulative_estimates.size


def ftrl_update(state: FtrlState, estimate) -> FtrlState:
    est = estimate.estimates if isinstance(estimate, EstimateVector) else estimate
    est = np.asarray(est, dtype=np.float64)
    if est.shape != state.cumulative_estimates.shape:
        raise InvalidArgument(
            f"estimate has shape {est.shape}, state has {state.cumulative_estimates.shape}")
    return FtrlState(state.cumulative_estimates + est, state.round + 1, state.scale)


def next_iterate(state: FtrlState) -> np.ndarray:
    lam = lambda_schedule(state.round, state.scale)
    return ftrl_argmin(state.cumulative_estimates, lam).iterate


class TsallisINF:
    """Tsallis-INF learner running ``n_runs`` independent copies in lockstep.

    The learner only ever receives the loss of the arm it pulled: ``update``
    takes one scalar per run.
    """

    name = "tsallis-inf"

    def __init__(self, n_arms: int, scale: float, n_runs: int = 1):
        if n_arms < 1 or n_runs < 1:
            raise InvalidArgument("need n_arms >= 1 and n_runs >= 1")
        if not scale > 0:
            raise InvalidArgument("scale G must be positive")
        self.n_arms = n_arms
        self.scale = float(scale)
        self.n_runs = n_runs
        self.cumulative = np.zeros((n_runs, n_arms))
        self.round = 1
        self._x = None

    def distribution(self) -> np.ndarray:
        if self._x is None:
            lam = lambda_schedule(self.round, self.scale)
            self._x, _, _, _ = solve_dual(self.cumulative, lam)
        return self._x

    def update(self, arms: np.ndarray, losses: np.ndarray) -> None:
        x = self.distribution()
        rows = np.arange(self.n_runs)
        self.cumulative[rows, arms] += losses / x[rows, arms]
        self.round += 1
        self._x = None


class UniformPolicy:
    """Baseline that always plays the uniform distribution."""

    name = "uniform"

    def __init__(self, n_arms: int, scale: float, n_runs: int = 1):
        self.n_arms = n_arms
        self.n_runs = n_runs
        self._x = np.full((n_runs, n_arms), 1.0 / n_arms)

    def distribution(self) -> np.ndarray:
        return self._x

    def update(self, arms: np.ndarray, losses: np.ndarray) -> None:
        pass
