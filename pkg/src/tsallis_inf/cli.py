"""Command line entry point: ``tsallis-inf run|bounds|verify``.

Exit codes: 0 success, 1 validation or I/O error, 2 numerical failure or a
failed verification check.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import GapProfile
from .environments import AdversarialSpec, load_loss_matrix, load_stochastic_spec
from .errors import BoundNotApplicable, InvalidArgument, NumericalFailure
from .harness import (RunConfig, adversarial_bound, baseline_uniform, monte_carlo,
                      render_report, stochastic_bound)
from .verify import run_verification

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2

RUN_DEFAULTS = {"reps": 1, "seed": 0, "format": "json", "scale_g": 1.0}


def _parse_floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgument(f"cannot parse {text!r} as comma-separated numbers") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsallis-inf",
                                description="Tsallis-INF bandit simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="Monte Carlo regret of Tsallis-INF")
    r.add_argument("--config", help="JSON file with RunConfig fields")
    r.add_argument("--arms", type=int)
    r.add_argument("--horizon", type=int)
    r.add_argument("--scale-g", type=float, dest="scale_g")
    r.add_argument("--env", choices=["stochastic", "matrix", "switching"])
    r.add_argument("--spec", help="arm distributions (JSON) or loss matrix (CSV)")
    r.add_argument("--reps", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="report path (default: stdout)")
    r.add_argument("--format", choices=["json", "csv"])
    r.add_argument("--baseline", action="store_true",
                   help="play the uniform distribution instead of Tsallis-INF")
    r.add_argument("--timing", action="store_true",
                   help="include wall time in JSON reports (breaks byte stability)")

    b = sub.add_parser("bounds", help="print both regret bounds")
    b.add_argument("--arms", type=int)
    b.add_argument("--horizon", type=int, required=True)
    b.add_argument("--scale-g", type=float, dest="scale_g", default=1.0)
    g = b.add_mutually_exclusive_group()
    g.add_argument("--gaps", help="comma-separated suboptimality gaps (one must be 0)")
    g.add_argument("--means", help="comma-separated mean losses")

    v = sub.add_parser("verify", help="run the verification checks")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.add_argument("--full", action="store_true",
                   help="use acceptance-scale instance counts")
    return p


def _run_settings(args) -> dict:
    settings = dict(RUN_DEFAULTS)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidArgument(f"cannot read config {args.config}: {e}") from None
        if not isinstance(cfg, dict):
            raise InvalidArgument("config file must hold a JSON object")
        settings.update(cfg)
    for key in ("arms", "horizon", "scale_g", "env", "spec", "reps", "seed", "out", "format"):
        val = getattr(args, key)
        if val is not None:
            settings[key] = val
    return settings


def config_from_settings(s: dict) -> RunConfig:
    env_kind = s.get("env")
    G = float(s["scale_g"])
    if env_kind == "stochastic":
        if not s.get("spec"):
            raise InvalidArgument("--env stochastic needs --spec <file.json>")
        env = load_stochastic_spec(s["spec"], G)
    elif env_kind == "matrix":
        if not s.get("spec"):
            raise InvalidArgument("--env matrix needs --spec <file.csv>")
        env = load_loss_matrix(s["spec"], G)
    elif env_kind == "switching":
        if s.get("arms") is None:
            raise InvalidArgument("--env switching needs --arms")
        env = AdversarialSpec.switching(int(s["arms"]), G)
    else:
        raise InvalidArgument("choose --env stochastic, matrix or switching")
    arms = s.get("arms", env.n_arms)
    horizon = s.get("horizon")
    if horizon is None:
        if env_kind != "matrix":
            raise InvalidArgument("--horizon is required")
        horizon = env.n_rounds
    return RunConfig(int(arms), int(horizon), G, env, int(s["reps"]), int(s["seed"]),
                     s.get("out"), s["format"])


def cmd_run(args) -> int:
    config = config_from_settings(_run_settings(args))
    runner = baseline_uniform if args.baseline else monte_carlo
    summary = runner(config)
    text = render_report(summary, config, config.fmt, include_timing=args.timing)
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)
    line = f"mean regret {summary.mean_regret:.6g} (se {summary.se_regret:.3g}), " \
           f"adversarial bound {summary.adversarial_bound:.6g}"
    if summary.mean_pseudo_regret is not None:
        line += f"; mean pseudo-regret {summary.mean_pseudo_regret:.6g}"
    print(line, file=sys.stderr)
    return EXIT_OK


def cmd_bounds(args) -> int:
    profile = None
    if args.gaps:
        gaps = _parse_floats(args.gaps)
        if not gaps or min(gaps) != 0 or any(v < 0 for v in gaps):
            raise InvalidArgument("gaps must be nonnegative with at least one 0")
        profile = GapProfile.from_means(gaps)
    elif args.means:
        profile = GapProfile.from_means(_parse_floats(args.means))
    d = args.arms if args.arms is not None else (profile.n_arms if profile else None)
    if d is None:
        raise InvalidArgument("give --arms, --gaps or --means")
    if profile is not None and profile.n_arms != d:
        raise InvalidArgument(f"{profile.n_arms} gaps given for {d} arms")
    out = {"arms": d, "horizon": args.horizon, "scale_g": args.scale_g,
           "adversarial": adversarial_bound(args.scale_g, d, args.horizon),
           "stochastic": None}
    if profile is not None:
        try:
            out["stochastic"] = stochastic_bound(args.scale_g, profile, args.horizon)
        except BoundNotApplicable as e:
            out["stochastic"] = {"applicable": False, "reason": str(e)}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.full:
        report = run_verification(args.seed, n_solver=1000, n_step=1000, n_fd=100,
                                  n_shift=100, identity_reps=500, interiority_horizon=10000)
    else:
        report = run_verification(args.seed)
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_NUMERIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "bounds": cmd_bounds, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except NumericalFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidArgument, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
