"""Episode runner, Monte Carlo aggregation, regret bounds and reports.

All repetitions of a batch advance in lockstep as rows of (R, d) arrays.
Each repetition owns its random streams, so its results do not depend on
which other repetitions share the batch.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import GapProfile, Trajectory, draw_arms
from .environments import AdversarialSpec, EnvSpec, LossSource, StochasticSpec
from .errors import BoundNotApplicable, InvalidArgument, NumericalFailure
from .solver import TsallisINF, UniformPolicy

RNG_NAME = "numpy.random.PCG64"
SEEDING = ("SeedSequence(entropy=seed, spawn_key=(rep,)).spawn(2) "
           "-> [arm draws, environment losses]")
DRAW_BLOCK = 1024


@dataclass
class RunConfig:
    n_arms: int
    horizon: int
    scale: float
    env: EnvSpec
    reps: int = 1
    seed: int = 0
    out: Optional[str] = None
    fmt: str = "json"

    def __post_init__(self):
        if self.n_arms < 1:
            raise InvalidArgument("need at least one arm")
        if self.horizon < 1:
            raise InvalidArgument("horizon must be >= 1")
        if self.reps < 1:
            raise InvalidArgument("need at least one repetition")
        if not self.scale > 0:
            raise InvalidArgument("scale G must be positive")
        if self.seed < 0:
            raise InvalidArgument("seed must be nonnegative")
        if self.fmt not in ("json", "csv"):
            raise InvalidArgument(f"unknown report format {self.fmt!r}")
        if self.env.n_arms != self.n_arms:
            raise InvalidArgument(
                f"environment has {self.env.n_arms} arms, config says {self.n_arms}")
        if self.env.scale != self.scale:
            raise InvalidArgument("environment and config disagree on G")
        if isinstance(self.env, AdversarialSpec) and self.env.matrix is not None \
                and self.env.n_rounds < self.horizon:
            raise InvalidArgument(
                f"loss matrix has {self.env.n_rounds} rounds, horizon is {self.horizon}")

    @property
    def gap_profile(self) -> Optional[GapProfile]:
        return self.env.gap_profile if isinstance(self.env, StochasticSpec) else None

    def to_dict(self) -> dict:
        return {"arms": self.n_arms, "horizon": self.horizon, "scale_g": self.scale,
                "env": _env_dict(self.env), "reps": self.reps, "seed": self.seed}


def _env_dict(env: EnvSpec) -> dict:
    d = env.to_dict()
    if isinstance(env, AdversarialSpec) and env.matrix is not None:
        d["sha256"] = hashlib.sha256(np.ascontiguousarray(env.matrix).tobytes()).hexdigest()
    return d


def adversarial_bound(G: float, d: int, T: int) -> float:
    """32 G sqrt((d - 1) T)."""
    if d < 1 or T < 1 or not G > 0:
        raise InvalidArgument("need d >= 1, T >= 1, G > 0")
    return 32.0 * G * math.sqrt((d - 1) * T)


def stochastic_bound(G: float, profile: GapProfile, T: int) -> float:
    """256 G^2 sum over suboptimal arms of (1 + ln T) / gap."""
    if T < 1 or not G > 0:
        raise InvalidArgument("need T >= 1, G > 0")
    if not profile.unique_best:
        raise BoundNotApplicable("stochastic bound needs a unique best arm")
    gaps = profile.gaps[profile.gaps > 0]
    return 256.0 * G * G * float(np.sum((1.0 + math.log(T)) / gaps))


def rep_streams(seed: int, rep: int):
    """(arm-draw rng, environment rng) for repetition ``rep``."""
    ss = np.random.SeedSequence(seed, spawn_key=(rep,))
    a, b = ss.spawn(2)
    return np.random.Generator(np.random.PCG64(a)), np.random.Generator(np.random.PCG64(b))


@dataclass
class _Batch:
    regrets: np.ndarray
    pull_counts: np.ndarray
    incurred: np.ndarray
    min_weight: np.ndarray
    curve_mean: np.ndarray
    curve_se: np.ndarray
    curve_pseudo: Optional[np.ndarray]
    checkpoints: dict
    trajectory: Optional[Trajectory] = None


def _simulate(config: RunConfig, reps: Sequence[int], policy=TsallisINF,
              record: bool = False, checkpoints: Sequence[int] = ()) -> _Batch:
    R, d, T = len(reps), config.n_arms, config.horizon
    streams = [rep_streams(config.seed, r) for r in reps]
    draw_rngs = [s[0] for s in streams]
    source = LossSource(config.env, [s[1] for s in streams])
    learner = policy(d, config.scale, R)
    profile = config.gap_profile
    checkpoints = set(int(c) for c in checkpoints)

    rows = np.arange(R)
    pulls = np.zeros((R, d), dtype=np.int64)
    cum_true = np.zeros((R, d))
    incurred = np.zeros(R)
    min_weight = np.ones(R)
    curve_mean = np.empty(T)
    curve_se = np.empty(T)
    curve_pseudo = np.empty(T) if profile is not None else None
    snaps = {}
    if record:
        rec_x = np.empty((T, d))
        rec_arm = np.empty(T, dtype=np.int64)
        rec_g = np.empty((T, d))
        rec_est = np.zeros((T, d))

    u = None
    for t in range(1, T + 1):
        k = (t - 1) % DRAW_BLOCK
        if k == 0:
            u = np.stack([g.random(DRAW_BLOCK) for g in draw_rngs])
        try:
            x = learner.distribution()
        except NumericalFailure as e:
            row = e.row if e.row is not None else 0
            norm = float(np.abs(getattr(learner, "cumulative", np.zeros((R, d)))[row]).max())
            raise NumericalFailure(
                f"repetition {reps[row]}, round {t}, max |cumulative estimate| "
                f"{norm:.6g}: {e}", row) from e
        np.minimum(min_weight, x.min(axis=1), out=min_weight)
        g = source.losses(t, pulls)
        arms = draw_arms(x, u[:, k])
        observed = g[rows, arms]
        if record:
            rec_x[t - 1] = x[0]
            rec_arm[t - 1] = arms[0]
            rec_g[t - 1] = g[0]
            rec_est[t - 1, arms[0]] = observed[0] / x[0, arms[0]]
        # the learner sees one scalar per run, never the full loss vector
        learner.update(arms, observed)

        pulls[rows, arms] += 1
        cum_true += g
        incurred += observed
        regret = incurred - cum_true.min(axis=1)
        curve_mean[t - 1] = regret.mean()
        curve_se[t - 1] = _se(regret)
        if profile is not None:
            pseudo = pulls @ profile.gaps
            curve_pseudo[t - 1] = pseudo.mean()
        if t in checkpoints:
            snaps[t] = {"regret": regret.copy(),
                        "pseudo_regret": None if profile is None else pseudo.copy()}

    batch = _Batch(incurred - cum_true.min(axis=1), pulls, incurred, min_weight,
                   curve_mean, curve_se, curve_pseudo, snaps)
    if record:
        batch.trajectory = Trajectory(T, rec_x, rec_arm, rec_g, rec_est, pulls[0].copy())
    return batch


def _se(v: np.ndarray) -> float:
    if v.size < 2:
        return 0.0
    return float(v.std(ddof=1) / math.sqrt(v.size))


def run_episode(config: RunConfig, rep_index: int = 0, policy=TsallisINF) -> Trajectory:
    """Run one repetition of the algorithm and keep every round."""
    return _simulate(config, [rep_index], policy, record=True).trajectory


@dataclass
class RegretSummary:
    policy: str
    horizon: int
    regrets: np.ndarray
    mean_regret: float
    se_regret: float
    adversarial_bound: float
    adversarial_bound_satisfied: bool
    pull_counts: np.ndarray
    min_weight: np.ndarray
    degenerate_sample: bool
    pseudo_regrets: Optional[np.ndarray] = None
    mean_pseudo_regret: Optional[float] = None
    se_pseudo_regret: Optional[float] = None
    loss_excess: Optional[np.ndarray] = None
    stochastic_bound: Optional[float] = None
    stochastic_bound_satisfied: Optional[bool] = None
    stochastic_bound_note: Optional[str] = None
    curve_mean_regret: Optional[np.ndarray] = None
    curve_se_regret: Optional[np.ndarray] = None
    curve_mean_pseudo_regret: Optional[np.ndarray] = None
    checkpoints: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def n_reps(self) -> int:
        return self.regrets.size


def monte_carlo(config: RunConfig, checkpoints: Sequence[int] = (),
                policy=TsallisINF) -> RegretSummary:
    """Run ``config.reps`` independent repetitions and aggregate their regret.

    ``checkpoints`` lists extra rounds at which per-repetition regret (and
    pseudo-regret) values are kept.
    """
    start = time.perf_counter()
    reps = list(range(config.reps))
    b = _simulate(config, reps, policy, checkpoints=checkpoints)
    T, G, d = config.horizon, config.scale, config.n_arms

    mean = float(b.regrets.mean())
    adv = adversarial_bound(G, d, T)
    s = RegretSummary(
        policy=policy.name, horizon=T, regrets=b.regrets, mean_regret=mean,
        se_regret=_se(b.regrets), adversarial_bound=adv,
        adversarial_bound_satisfied=bool(mean <= adv),
        pull_counts=b.pull_counts, min_weight=b.min_weight,
        degenerate_sample=config.reps == 1,
        curve_mean_regret=b.curve_mean, curve_se_regret=b.curve_se,
        curve_mean_pseudo_regret=b.curve_pseudo, checkpoints=b.checkpoints)

    profile = config.gap_profile
    if profile is not None:
        s.pseudo_regrets = b.pull_counts @ profile.gaps
        s.mean_pseudo_regret = float(s.pseudo_regrets.mean())
        s.se_pseudo_regret = _se(s.pseudo_regrets)
        s.loss_excess = b.incurred - T * profile.best_mean
        try:
            s.stochastic_bound = stochastic_bound(G, profile, T)
            s.stochastic_bound_satisfied = bool(s.mean_pseudo_regret <= s.stochastic_bound)
        except BoundNotApplicable as e:
            s.stochastic_bound_note = str(e)
    s.wall_time = time.perf_counter() - start
    return s


def baseline_uniform(config: RunConfig, checkpoints: Sequence[int] = ()) -> RegretSummary:
    return monte_carlo(config, checkpoints, policy=UniformPolicy)


def _report_dict(summary: RegretSummary, config: RunConfig, include_timing: bool) -> dict:
    out = {
        "config": config.to_dict(),
        "policy": summary.policy,
        "rng": {"bit_generator": RNG_NAME, "seeding": SEEDING},
        "seeds": [{"rep": r, "entropy": config.seed, "spawn_key": [r]}
                  for r in range(summary.n_reps)],
        "regret": {
            "per_rep": summary.regrets.tolist(),
            "mean": summary.mean_regret,
            "se": summary.se_regret,
            "degenerate_sample": summary.degenerate_sample,
        },
        "pseudo_regret": None,
        "bounds": {
            "adversarial": {"value": summary.adversarial_bound,
                            "satisfied": summary.adversarial_bound_satisfied},
            "stochastic": None,
        },
        "mean_pull_counts": {f"arm_{i + 1}": float(v)
                             for i, v in enumerate(summary.pull_counts.mean(axis=0))},
        "min_weight": float(summary.min_weight.min()),
    }
    if summary.pseudo_regrets is not None:
        out["pseudo_regret"] = {
            "per_rep": summary.pseudo_regrets.tolist(),
            "mean": summary.mean_pseudo_regret,
            "se": summary.se_pseudo_regret,
        }
        if summary.stochastic_bound is not None:
            out["bounds"]["stochastic"] = {"value": summary.stochastic_bound,
                                           "satisfied": summary.stochastic_bound_satisfied}
        else:
            out["bounds"]["stochastic"] = {"applicable": False,
                                           "reason": summary.stochastic_bound_note}
    if include_timing:
        out["wall_time_s"] = summary.wall_time
    return out


def _curve_bound(config: RunConfig, t: int) -> float:
    profile = config.gap_profile
    if profile is not None and profile.unique_best:
        return stochastic_bound(config.scale, profile, t)
    return adversarial_bound(config.scale, config.n_arms, t)


def render_report(summary: RegretSummary, config: RunConfig, fmt: str = "json",
                  include_timing: bool = False) -> str:
    if fmt == "json":
        return json.dumps(_report_dict(summary, config, include_timing),
                          indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise InvalidArgument(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    pseudo = summary.curve_mean_pseudo_regret
    header = ["round", "mean_regret", "se_regret"]
    if pseudo is not None:
        header.append("mean_pseudo_regret")
    w.writerow(header + ["bound_at_T"])
    for t in range(1, summary.horizon + 1):
        row = [t, repr(float(summary.curve_mean_regret[t - 1])),
               repr(float(summary.curve_se_regret[t - 1]))]
        if pseudo is not None:
            row.append(repr(float(pseudo[t - 1])))
        row.append(repr(_curve_bound(config, t)))
        w.writerow(row)
    return buf.getvalue()


def emit_report(summary: RegretSummary, config: RunConfig, fmt: str = None,
                path=None, include_timing: bool = False) -> Path:
    """Write the report to ``path`` (default ``config.out``).

    Wall time is left out unless ``include_timing`` is set, so that equal
    inputs give byte-identical files.
    """
    fmt = fmt or config.fmt
    path = path or config.out
    if path is None:
        raise InvalidArgument("no output path given")
    text = render_report(summary, config, fmt, include_timing)
    p = Path(path)
    p.write_text(text)
    return p
