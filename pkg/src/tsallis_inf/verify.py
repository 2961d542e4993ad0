"""Independent oracles and property checks for the algorithm's analysis.

Nothing here reuses the solver's dual root-finder: the simplex oracle works
by pairwise mass exchange in the primal, and the unconstrained-step oracle
bisects each coordinate's stationarity condition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.optimize import brentq

from .core import (EstimateVector, Trajectory, regularizer, regularizer_gradient,
                   regularizer_hessian_diag, uniform_point)
from .environments import AdversarialSpec, StochasticSpec, bernoulli
from .errors import InvalidArgument, NotApplicable, NumericalFailure, PreconditionViolation
from .harness import RunConfig, monte_carlo, run_episode
from .solver import FtrlState, ftrl_argmin, kkt_residual, next_iterate

SPREAD_TOL = 1e-9
PAIR_MAX_ITER = 2000
GRID_MAX_D = 4


# --- simplex argmin oracle -------------------------------------------------

@lru_cache(maxsize=16)
def _barycentric_grid(d: int, n: int) -> np.ndarray:
    # stars and bars: each choice of d-1 bar positions among n+d-1 slots
    pts = []
    for bars in combinations(range(n + d - 1), d - 1):
        edges = (-1,) + bars + (n + d - 1,)
        pts.append([edges[k + 1] - edges[k] - 1 for k in range(d)])
    g = np.array(pts, dtype=np.float64) / n
    g.setflags(write=False)
    return g


def _pair_split(s, Li, Lj, lam):
    """Share mass ``s`` between arms i, j so their partial derivatives match.

    Returns the new ``(x_i, x_j)``.
    """
    # solve for whichever of the two coordinates ends up smaller, keeping
    # full relative precision on it
    def h(v, La, Lb):
        return (La - lam / (2.0 * math.sqrt(v))) - (Lb - lam / (2.0 * math.sqrt(s - v)))

    half = 0.5 * s
    if h(half, Li, Lj) > 0:
        small, La, Lb = True, Li, Lj
    else:
        small, La, Lb = False, Lj, Li
    a = s * 1e-200
    if a == 0 or h(a, La, Lb) >= 0:
        v = a
    else:
        v = brentq(h, a, half, args=(La, Lb), xtol=1e-300,
                   rtol=4 * np.finfo(float).eps, maxiter=500)
    return (v, s - v) if small else (s - v, v)


def pairwise_descent(L, lam: float, x0=None, tol: float = SPREAD_TOL,
                     max_iter: int = PAIR_MAX_ITER) -> np.ndarray:
    """Feasible-direction descent on the simplex.

    Sweeps over the arms; each arm exchanges mass with the currently heaviest
    arm, solving that two-arm subproblem exactly. The heaviest arm has the
    smallest curvature, so equalizing against it barely moves its own
    derivative and the sweeps contract quickly. Stops when
    the derivative spread is at most ``tol * max(1, lam)`` or a full sweep
    changes nothing representable.
    """
    L = np.asarray(L, dtype=np.float64)
    d = L.size
    x = uniform_point(d) if x0 is None else np.array(x0, dtype=np.float64)
    if d == 1:
        return np.ones(1)
    target = tol * max(1.0, lam)
    with np.errstate(divide="ignore"):
        for _ in range(max_iter):
            g = L - lam / (2.0 * np.sqrt(x))
            if g.max() - g.min() <= target:
                break
            moved = False
            for j in range(d):
                i = int(np.argmax(x))
                if i == j:
                    continue
                s = x[i] + x[j]
                if s == 0:
                    continue
                xi, xj = _pair_split(s, L[i], L[j], lam)
                if xi != x[i] or xj != x[j]:
                    moved = True
                    x[i], x[j] = xi, xj
            if not moved:
                break
        else:
            raise NumericalFailure(f"pairwise descent did not reach spread {target:.1e}")
    return x / x.sum()



def brute_force_simplex_argmin(L, lam: float, resolution: int = 60,
                               mode: str = None) -> np.ndarray:
    """Oracle minimizer of ``<L, x> - lam * sum sqrt(x_i)`` over the simplex.

    ``mode="grid"`` (default for d <= 4) scans a barycentric grid with
    ``resolution`` steps per unit and refines its best point by pairwise
    descent. ``mode="descent"`` runs pairwise descent from the uniform point.
    """
    L = np.asarray(L, dtype=np.float64)
    d = L.size
    if resolution < 10:
        raise InvalidArgument("resolution must be >= 10")
    if mode is None:
        mode = "grid" if d <= GRID_MAX_D else "descent"
    if mode == "descent":
        return pairwise_descent(L, lam)
    if mode != "grid":
        raise InvalidArgument(f"unknown mode {mode!r}")
    if d > GRID_MAX_D:
        raise InvalidArgument(f"grid mode supports d <= {GRID_MAX_D}")
    return pairwise_descent(L, lam, x0=grid_argmin(L, lam, resolution))


def grid_argmin(L, lam: float, resolution: int) -> np.ndarray:
    """Best point of the barycentric grid, without refinement."""
    L = np.asarray(L, dtype=np.float64)
    grid = _barycentric_grid(L.size, resolution)
    vals = grid @ L - lam * np.sqrt(grid).sum(axis=1)
    return grid[int(np.argmin(vals))].copy()


# --- Bregman divergence and the unconstrained step --------------------------

def bregman_divergence_tsallis(x, y, lam: float) -> float:
    """Bregman divergence of ``lam * psi`` at ``x`` around ``y``, psi = -sum sqrt."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise InvalidArgument("y must be strictly positive")
    if np.any(x < 0):
        raise InvalidArgument("x must be nonnegative")
    return float(lam * (np.sum(np.sqrt(y) - np.sqrt(x)) + np.sum((x - y) / (2.0 * np.sqrt(y)))))


@dataclass(frozen=True)
class UnconstrainedStepInputs:
    x_t: np.ndarray
    estimate: np.ndarray
    shift: float
    lam: float
    scale: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.x_t, dtype=np.float64)
        est = self.estimate.estimates if isinstance(self.estimate, EstimateVector) \
            else np.asarray(self.estimate, dtype=np.float64)
        object.__setattr__(self, "x_t", x)
        object.__setattr__(self, "estimate", est)
        if x.shape != est.shape:
            raise InvalidArgument("x_t and estimate must have the same length")
        if np.any(x <= 0):
            raise PreconditionViolation("x_t must be strictly interior")
        if not 0 <= self.shift <= self.scale:
            raise PreconditionViolation(f"shift {self.shift} outside [0, {self.scale}]")
        if not self.scale / self.lam <= 0.25:
            raise PreconditionViolation(f"G / lambda = {self.scale / self.lam} exceeds 1/4")

    @property
    def shifted_loss(self) -> np.ndarray:
        return self.estimate - self.shift


def step_denominators(inputs: UnconstrainedStepInputs) -> np.ndarray:
    return 1.0 + 2.0 / inputs.lam * inputs.shifted_loss * np.sqrt(inputs.x_t)


def closed_form_unconstrained_step(inputs: UnconstrainedStepInputs) -> np.ndarray:
    """x / (1 + 2 (g - b) sqrt(x) / lam)^2, coordinatewise."""
    den = step_denominators(inputs)
    if np.any(den <= 0):
        raise PreconditionViolation(
            f"nonpositive denominator {den.min()!r} in the closed-form step")
    return inputs.x_t / den**2


def _step_objective(x, inputs: UnconstrainedStepInputs) -> float:
    return bregman_divergence_tsallis(x, inputs.x_t, inputs.lam) \
        + float(np.dot(inputs.shifted_loss, x))


def numeric_unconstrained_step(inputs: UnconstrainedStepInputs, return_residual: bool = False):
    """Minimize the Bregman step over the nonnegative orthant numerically.

    The objective separates by coordinate; each coordinate's derivative
    ``lam (1/(2 sqrt(y)) - 1/(2 sqrt(x))) + c`` is increasing in ``x`` and is
    bisected to float adjacency.
    """
    y, c, lam = inputs.x_t, inputs.shifted_loss, inputs.lam

    def deriv(x):
        return lam * (0.5 / np.sqrt(y) - 0.5 / np.sqrt(x)) + c

    if np.any(lam / (2.0 * np.sqrt(y)) + c <= 0):
        raise PreconditionViolation("step objective is unbounded below")
    lo = np.zeros_like(y)
    hi = y.copy()
    for _ in range(2100):
        low = deriv(hi) <= 0
        if not low.any():
            break
        hi[low] *= 2.0
    for _ in range(2200):
        mid = 0.5 * (lo + hi)
        moved = (mid > lo) & (mid < hi)
        if not moved.any():
            break
        with np.errstate(divide="ignore"):
            neg = deriv(mid) < 0
        lo = np.where(moved & neg, mid, lo)
        hi = np.where(moved & ~neg, mid, hi)
    x = 0.5 * (lo + hi)
    if not return_residual:
        return x
    # residual of the stationarity condition, relative to the curvature scale
    resid = np.abs(deriv(x)) / (lam / (2.0 * np.sqrt(x)))
    return x, float(resid.max())


def random_step_inputs(rng: np.random.Generator, d: int) -> UnconstrainedStepInputs:
    """A random input satisfying 0 <= b <= G and G / lambda <= 1/4."""
    x = rng.dirichlet(np.ones(d))
    x = np.maximum(x, 1e-12)
    x /= x.sum()
    G = float(rng.uniform(0.1, 10.0))
    lam = G * float(rng.uniform(4.0, 100.0))
    arm = int(rng.integers(d))
    est = np.zeros(d)
    est[arm] = rng.uniform(0.0, G) / x[arm]
    return UnconstrainedStepInputs(x, est, float(rng.uniform(0.0, G)), lam, G)


# --- finite-difference checks ----------------------------------------------

def gradient_fd_error(x, lam: float, rel_step: float = 1e-6) -> float:
    """Max relative error of the analytic gradient vs central differences."""
    x = np.asarray(x, dtype=np.float64)
    analytic = regularizer_gradient(x, lam)
    fd = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * x[i]
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fd[i] = (regularizer(xp, lam) - regularizer(xm, lam)) / (2.0 * h)
    return float(np.max(np.abs(fd - analytic) / np.abs(analytic)))


def hessian_fd_error(x, lam: float, rel_step: float = 1e-6) -> float:
    """Max relative error of the diagonal Hessian vs differences of the gradient.

    Off-diagonal finite differences are compared against zero, scaled by the
    smallest diagonal entry.
    """
    x = np.asarray(x, dtype=np.float64)
    d = x.size
    diag = regularizer_hessian_diag(x, lam)
    H = np.empty((d, d))
    for i in range(d):
        h = rel_step * x[i]
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        H[:, i] = (regularizer_gradient(xp, lam) - regularizer_gradient(xm, lam)) / (2.0 * h)
    err_diag = np.max(np.abs(np.diag(H) - diag) / diag)
    off = H - np.diag(np.diag(H))
    err_off = np.max(np.abs(off)) / diag.min() if d > 1 else 0.0
    return float(max(err_diag, err_off))


# --- trajectory and Monte Carlo checks --------------------------------------

def check_interiority(trajectory: Trajectory) -> dict:
    """Smallest weight any arm received over the run; passes if it is > 1e-300."""
    x = trajectory.iterates[:trajectory.n_rounds]
    flat = int(np.argmin(x))
    t, i = divmod(flat, x.shape[1])
    m = float(x.flat[flat])
    return {"name": "interiority", "passed": bool(m > 1e-300), "min_weight": m,
            "round": t + 1, "arm": i + 1}


def check_pseudo_regret_identity(spec, config: RunConfig, nsigma: float = 3.0) -> dict:
    """Compare two Monte Carlo estimators of the pseudo-regret.

    (a) mean of sum_t g_{t,I_t} - T mu*; (b) mean of sum_i S_i gap_i.
    Passes if they differ by at most ``nsigma`` combined standard errors plus
    a float slack of 1e-9 * T * G, which covers deterministic specs.
    """
    if not isinstance(spec, StochasticSpec):
        raise NotApplicable("the pseudo-regret identity needs a stochastic spec")
    cfg = RunConfig(spec.n_arms, config.horizon, spec.scale, spec, config.reps, config.seed)
    s = monte_carlo(cfg)
    a, b = float(s.loss_excess.mean()), s.mean_pseudo_regret
    se_a = float(s.loss_excess.std(ddof=1) / math.sqrt(cfg.reps)) if cfg.reps > 1 else 0.0
    se = math.hypot(se_a, s.se_pseudo_regret)
    slack = nsigma * se + 1e-9 * cfg.horizon * cfg.scale
    return {"name": "pseudo_regret_identity", "passed": bool(abs(a - b) <= slack),
            "loss_excess_mean": a, "pull_gap_mean": b, "combined_se": se,
            "difference": a - b, "tolerance": slack}


def translation_invariance_error(L, c: float, lam: float) -> float:
    x1 = ftrl_argmin(L, lam).iterate
    x2 = ftrl_argmin(np.asarray(L, dtype=np.float64) + c, lam).iterate
    return float(np.max(np.abs(x1 - x2)))


# --- suite -------------------------------------------------------------------

def _check(name, passed, **measured):
    return {"name": name, "passed": bool(passed), **measured}


def run_verification(seed: int = 0, n_solver: int = 200, n_step: int = 1000,
                     n_fd: int = 100, n_shift: int = 100, identity_reps: int = 200,
                     interiority_horizon: int = 2000) -> dict:
    """Run every check at reduced sizes and return a JSON-ready report."""
    rng = np.random.default_rng(seed)
    checks = []

    worst_kkt = worst_sum = worst_oracle = 0.0
    for _ in range(n_solver):
        d = int(rng.choice([2, 3, 5, 10]))
        L = rng.uniform(0.0, 1e4, d)
        lam = float(rng.uniform(0.1, 100.0))
        r = ftrl_argmin(L, lam)
        worst_kkt = max(worst_kkt, kkt_residual(r.iterate, L, lam) / lam)
        worst_sum = max(worst_sum, abs(r.iterate.sum() - 1.0))
        oracle = brute_force_simplex_argmin(L, lam)
        worst_oracle = max(worst_oracle, float(np.max(np.abs(oracle - r.iterate))))
    checks.append(_check("solver_vs_oracle",
                         worst_kkt <= 1e-8 and worst_sum <= 1e-10 and worst_oracle <= 1e-6,
                         instances=n_solver, max_kkt_over_lambda=worst_kkt,
                         max_sum_error=worst_sum, max_oracle_gap=worst_oracle,
                         tolerances={"kkt_over_lambda": 1e-8, "sum": 1e-10, "oracle": 1e-6}))

    worst_gap = worst_ratio = worst_resid = 0.0
    nonpositive = 0
    for _ in range(n_step):
        inp = random_step_inputs(rng, int(rng.integers(2, 11)))
        if np.any(step_denominators(inp) <= 0):
            nonpositive += 1
            continue
        cf = closed_form_unconstrained_step(inp)
        num, resid = numeric_unconstrained_step(inp, return_residual=True)
        worst_gap = max(worst_gap, float(np.max(np.abs(cf - num))))
        worst_ratio = max(worst_ratio, float(np.max(cf / inp.x_t)))
        worst_resid = max(worst_resid, resid)
    checks.append(_check("closed_form_step",
                         worst_gap <= 1e-8 and worst_ratio <= 4.0 and nonpositive == 0,
                         instances=n_step, max_gap=worst_gap, max_growth_ratio=worst_ratio,
                         nonpositive_denominators=nonpositive,
                         max_relative_stationarity_residual=worst_resid,
                         tolerances={"gap": 1e-8, "growth_ratio": 4.0}))

    g_err = h_err = 0.0
    for d in (2, 5, 20):
        for _ in range(n_fd):
            x = rng.dirichlet(np.ones(d))
            lam = float(rng.uniform(0.1, 100.0))
            g_err = max(g_err, gradient_fd_error(x, lam))
            h_err = max(h_err, hessian_fd_error(x, lam))
    checks.append(_check("finite_differences", g_err <= 1e-6 and h_err <= 1e-5,
                         max_gradient_rel_error=g_err, max_hessian_rel_error=h_err,
                         tolerances={"gradient": 1e-6, "hessian": 1e-5}))

    t_err = 0.0
    for _ in range(n_shift):
        d = int(rng.integers(2, 11))
        t_err = max(t_err, translation_invariance_error(
            rng.uniform(0.0, 100.0, d), float(rng.uniform(-1e3, 1e3)),
            float(rng.uniform(0.1, 100.0))))
    checks.append(_check("translation_invariance", t_err <= 1e-10,
                         max_iterate_diff=t_err, tolerance=1e-10))

    first = max(float(np.max(np.abs(next_iterate(FtrlState.fresh(d, 1.0)) - 1.0 / d)))
                for d in range(1, 33))
    checks.append(_check("first_iterate_uniform", first <= 1e-12,
                         max_deviation=first, tolerance=1e-12))

    adv = np.zeros((interiority_horizon, 4))
    adv[:, 0] = 1.0
    traj = run_episode(RunConfig(4, interiority_horizon, 1.0,
                                 AdversarialSpec.from_matrix(adv), seed=seed))
    checks.append(check_interiority(traj))

    spec = StochasticSpec((bernoulli(0.3), bernoulli(0.5), bernoulli(0.7)))
    checks.append(check_pseudo_regret_identity(
        spec, RunConfig(3, 1000, 1.0, spec, reps=identity_reps, seed=seed)))

    return {"seed": seed, "passed": all(c["passed"] for c in checks), "checks": checks}

