"""Acceptance suite: one test per criterion, each at its stated size and tolerance.

Results are also printed as one PASS/FAIL line per criterion at the end of
the pytest run (see conftest.py).
"""
import math

import numpy as np
import pytest

from tsallis_inf.environments import AdversarialSpec, StochasticSpec, bernoulli
from tsallis_inf.harness import RunConfig, adversarial_bound, monte_carlo, stochastic_bound
from tsallis_inf.solver import FtrlState, ftrl_argmin, kkt_residual, next_iterate
from tsallis_inf.verify import (brute_force_simplex_argmin, check_pseudo_regret_identity,
                                closed_form_unconstrained_step, gradient_fd_error,
                                hessian_fd_error, numeric_unconstrained_step,
                                random_step_inputs, translation_invariance_error)

pytestmark = pytest.mark.slow

SEED = 0
R = 100


@pytest.fixture(scope="module")
def switching_runs():
    spec = AdversarialSpec.switching(8, 1.0)
    return {T: monte_carlo(RunConfig(8, T, 1.0, spec, reps=R, seed=SEED))
            for T in (10_000, 40_000)}


@pytest.fixture(scope="module")
def stochastic_run():
    # the learner is anytime, so rounds 1e4 and 5e4 of a 1e5-round run are
    # exactly the results of shorter runs with the same seeds
    spec = StochasticSpec((bernoulli(0.5), bernoulli(0.6)))
    return monte_carlo(RunConfig(2, 100_000, 1.0, spec, reps=R, seed=SEED),
                       checkpoints=(10_000, 50_000))


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def test_c01_adversarial_bound(switching_runs, acceptance):
    s = switching_runs[10_000]
    bound = adversarial_bound(1.0, 8, 10_000)
    assert bound == pytest.approx(8466.40, abs=0.01)
    upper = s.mean_regret + 2 * s.se_regret
    ok = acceptance(1, "adversarial bound, d=8 T=1e4 switching", upper <= bound,
                    f"mean+2SE={upper:.1f} <= {bound:.1f} (runtime {s.wall_time:.1f}s)")
    assert ok
    assert s.wall_time < 300


def test_c02_sublinear_growth(switching_runs, acceptance):
    m1, m4 = switching_runs[10_000].mean_regret, switching_runs[40_000].mean_regret
    ratio = m4 / m1
    ok = acceptance(2, "sublinear growth, regret(4e4)/regret(1e4)", ratio <= 2.6,
                    f"ratio={ratio:.3f} <= 2.6 ({m4:.1f} / {m1:.1f})")
    assert ok


def test_c03_stochastic_bound(stochastic_run, acceptance):
    T = 50_000
    p = stochastic_run.checkpoints[T]["pseudo_regret"]
    mean, se = _mean_se(p)
    bound = stochastic_bound(1.0, StochasticSpec((bernoulli(0.5), bernoulli(0.6))).gap_profile, T)
    assert bound == pytest.approx(256 * (1 + math.log(T)) / 0.1, rel=1e-12)
    ok = acceptance(3, "stochastic bound, means (0.5,0.6) T=5e4", mean + 2 * se <= bound,
                    f"mean+2SE={mean + 2 * se:.1f} <= {bound:.1f}")
    assert ok


def test_c04_logarithmic_growth(stochastic_run, acceptance):
    p1 = stochastic_run.checkpoints[10_000]["pseudo_regret"]
    p2 = stochastic_run.pseudo_regrets
    # second decade adds no more than the first: p2 - p1 <= p1, i.e. p2 - 2 p1 <= 0,
    # judged with 2 SE slack on the paired per-repetition statistic
    mean, se = _mean_se(p2 - 2 * p1)
    ok = acceptance(4, "logarithmic growth, second decade <= first", mean <= 2 * se,
                    f"mean(p(1e5) - 2 p(1e4))={mean:.2f} <= 2SE={2 * se:.2f} "
                    f"(p(1e4)={p1.mean():.1f}, p(1e5)={p2.mean():.1f})")
    assert ok


def test_c05_solver_correctness(acceptance):
    rng = np.random.default_rng(SEED)
    worst_kkt = worst_sum = worst_gap = 0.0
    for _ in range(1000):
        d = int(rng.choice([2, 3, 5, 10]))
        L = rng.uniform(0, 1e4, d)
        lam = float(rng.uniform(0.1, 100))
        x = ftrl_argmin(L, lam).iterate
        worst_kkt = max(worst_kkt, kkt_residual(x, L, lam) / lam)
        worst_sum = max(worst_sum, abs(x.sum() - 1))
        worst_gap = max(worst_gap, float(np.abs(x - brute_force_simplex_argmin(L, lam)).max()))
    ok = acceptance(5, "solver vs oracle, 1000 instances",
                    worst_kkt <= 1e-8 and worst_sum <= 1e-10 and worst_gap <= 1e-6,
                    f"kkt/lam={worst_kkt:.1e}, |sum-1|={worst_sum:.1e}, oracle gap={worst_gap:.1e}")
    assert ok


def test_c06_closed_form_step(acceptance):
    rng = np.random.default_rng(SEED)
    worst_gap = worst_ratio = 0.0
    for _ in range(1000):
        inp = random_step_inputs(rng, int(rng.integers(2, 11)))
        cf = closed_form_unconstrained_step(inp)
        worst_gap = max(worst_gap, float(np.abs(cf - numeric_unconstrained_step(inp)).max()))
        worst_ratio = max(worst_ratio, float((cf / inp.x_t).max()))
    ok = acceptance(6, "closed-form vs numeric step, 1000 inputs",
                    worst_gap <= 1e-8 and worst_ratio <= 4,
                    f"max gap={worst_gap:.1e} <= 1e-8, max x~/x={worst_ratio:.3f} <= 4")
    assert ok


def test_c07_finite_differences(acceptance):
    rng = np.random.default_rng(SEED)
    g_err = h_err = 0.0
    for d in (2, 5, 20):
        for _ in range(100):
            x = rng.dirichlet(np.ones(d))
            lam = float(rng.uniform(0.1, 100))
            g_err = max(g_err, gradient_fd_error(x, lam))
            h_err = max(h_err, hessian_fd_error(x, lam))
    ok = acceptance(7, "gradient/Hessian finite differences, d in {2,5,20}",
                    g_err <= 1e-6 and h_err <= 1e-5,
                    f"gradient rel err={g_err:.1e} <= 1e-6, Hessian rel err={h_err:.1e} <= 1e-5")
    assert ok


def test_c08_translation_invariance(acceptance):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 11))
        L = rng.uniform(0, 1e4, d)
        worst = max(worst, translation_invariance_error(
            L, float(rng.uniform(-1e4, 1e4)), float(rng.uniform(0.1, 100))))
    ok = acceptance(8, "translation invariance, 100 pairs", worst <= 1e-10,
                    f"max iterate diff={worst:.1e} <= 1e-10")
    assert ok


def test_c09_pseudo_regret_identity(acceptance):
    spec = StochasticSpec((bernoulli(0.3), bernoulli(0.5), bernoulli(0.7)))
    rep = check_pseudo_regret_identity(spec, RunConfig(3, 1000, 1.0, spec, reps=500, seed=SEED))
    ok = acceptance(9, "pseudo-regret identity, d=3 T=1e3 R=500", rep["passed"],
                    f"|diff|={abs(rep['difference']):.3f} <= 3 combined SE "
                    f"({3 * rep['combined_se']:.3f})")
    assert ok


def test_c10_first_iterate_uniform(acceptance):
    worst = max(float(np.abs(next_iterate(FtrlState.fresh(d, 1.0)) - 1.0 / d).max())
                for d in range(1, 33))
    ok = acceptance(10, "first iterate uniform, d=1..32", worst <= 1e-12,
                    f"max deviation={worst:.1e} <= 1e-12")
    assert ok
