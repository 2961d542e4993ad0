"""Loss generators for the stochastic and adversarial settings."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .core import GapProfile
from .errors import IngestionError, InvalidArgument, InvalidState

FAMILIES = ("bernoulli", "uniform", "constant")


def bernoulli(p: float) -> dict:
    return {"family": "bernoulli", "p": p}


def uniform(low: float, high: float) -> dict:
    return {"family": "uniform", "low": low, "high": high}


def constant(value: float) -> dict:
    return {"family": "constant", "value": value}


@dataclass(frozen=True)
class StochasticSpec:
    """Independent per-arm loss distributions with supports inside [0, G].

    ``arms`` is a tuple of dicts such as ``{"family": "bernoulli", "p": 0.4}``.
    """
    arms: tuple
    scale: float = 1.0

    def __post_init__(self):
        if len(self.arms) < 1:
            raise InvalidArgument("need at least one arm")
        if not self.scale > 0:
            raise InvalidArgument("scale G must be positive")
        object.__setattr__(self, "arms", tuple(dict(a) for a in self.arms))
        for i, a in enumerate(self.arms):
            _check_arm(a, self.scale, i)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> np.ndarray:
        G = self.scale
        out = []
        for a in self.arms:
            fam = a["family"]
            if fam == "bernoulli":
                out.append(a["p"] * G)
            elif fam == "uniform":
                out.append(0.5 * (a["low"] + a["high"]))
            else:
                out.append(a["value"])
        return np.array(out, dtype=np.float64)

    @property
    def gap_profile(self) -> GapProfile:
        return GapProfile.from_means(self.means)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` rounds of losses, shape (size, d).

        One uniform per arm per round is consumed regardless of family so the
        stream layout does not depend on the arm families.
        """
        u = rng.random((size, self.n_arms))
        out = np.empty_like(u)
        G = self.scale
        for i, a in enumerate(self.arms):
            fam = a["family"]
            if fam == "bernoulli":
                out[:, i] = np.where(u[:, i] < a["p"], G, 0.0)
            elif fam == "uniform":
                out[:, i] = a["low"] + (a["high"] - a["low"]) * u[:, i]
            else:
                out[:, i] = a["value"]
        return out

    def to_dict(self) -> dict:
        return {"kind": "stochastic", "scale": self.scale, "arms": [dict(a) for a in self.arms]}


def _check_arm(a: dict, G: float, i: int) -> None:
    fam = a.get("family")
    if fam not in FAMILIES:
        raise InvalidArgument(f"arm {i + 1}: unknown family {fam!r}")
    try:
        if fam == "bernoulli":
            ok = 0.0 <= float(a["p"]) <= 1.0
        elif fam == "uniform":
            ok = 0.0 <= float(a["low"]) <= float(a["high"]) <= G
        else:
            ok = 0.0 <= float(a["value"]) <= G
    except KeyError as e:
        raise InvalidArgument(f"arm {i + 1}: missing parameter {e}") from None
    if not ok:
        raise InvalidArgument(f"arm {i + 1}: {a} has support outside [0, {G}]")


def sample_stochastic_round(spec: StochasticSpec, rng: np.random.Generator) -> np.ndarray:
    return spec.sample(rng, 1)[0]


def load_stochastic_spec(path, scale: float = 1.0) -> StochasticSpec:
    """Read ``{"arms": [...]}`` (or a bare list of arm dicts) from a JSON file."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise IngestionError(f"cannot read stochastic spec {path}: {e}") from None
    arms = data["arms"] if isinstance(data, dict) else data
    return StochasticSpec(tuple(arms), scale)


GENERATORS = ("switching",)


@dataclass(frozen=True)
class AdversarialSpec:
    """Either an explicit T x d loss matrix or a named adaptive generator.

    The ``switching`` generator gives loss 0 to the arm pulled least often so
    far (ties go to the lowest index) and G to every other arm.
    """
    n_arms: int
    scale: float = 1.0
    matrix: np.ndarray = None
    generator: str = None

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidArgument("scale G must be positive")
        if (self.matrix is None) == (self.generator is None):
            raise InvalidArgument("give exactly one of matrix or generator")
        if self.matrix is not None:
            m = np.array(self.matrix, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] != self.n_arms:
                raise InvalidArgument(f"matrix must be T x {self.n_arms}")
            _check_matrix_range(m, self.scale)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.generator not in GENERATORS:
            raise InvalidArgument(f"unknown generator {self.generator!r}")
        if self.n_arms < 1:
            raise InvalidArgument("need at least one arm")

    @classmethod
    def from_matrix(cls, matrix, scale: float = 1.0) -> "AdversarialSpec":
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2:
            raise InvalidArgument("loss matrix must be 2-d")
        return cls(m.shape[1], scale, matrix=m)

    @classmethod
    def switching(cls, n_arms: int, scale: float = 1.0) -> "AdversarialSpec":
        return cls(n_arms, scale, generator="switching")

    @property
    def n_rounds(self):
        return None if self.matrix is None else self.matrix.shape[0]

    def to_dict(self) -> dict:
        if self.matrix is not None:
            return {"kind": "matrix", "scale": self.scale, "rounds": self.n_rounds,
                    "arms": self.n_arms}
        return {"kind": self.generator, "scale": self.scale, "arms": self.n_arms}


def _check_matrix_range(m: np.ndarray, G: float) -> None:
    bad = ~np.isfinite(m) | (m < 0) | (m > G)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise IngestionError(
            f"loss {m[r, c]!r} at row {r + 1}, column {c + 1} is outside [0, {G}]")


def switching_losses(pull_counts: np.ndarray, scale: float) -> np.ndarray:
    """Row-wise switching adversary; argmin already breaks ties toward index 0."""
    pull_counts = np.atleast_2d(pull_counts)
    out = np.full(pull_counts.shape, float(scale))
    out[np.arange(len(out)), pull_counts.argmin(axis=1)] = 0.0
    return out


def adversarial_round(spec: AdversarialSpec, history: Sequence[int]) -> np.ndarray:
    """Losses of round ``len(history) + 1`` given the arms pulled so far."""
    t = len(history)
    if spec.matrix is not None:
        if t >= spec.n_rounds:
            raise InvalidState(f"loss matrix has only {spec.n_rounds} rounds")
        return spec.matrix[t].copy()
    counts = np.bincount(np.asarray(history, dtype=np.int64), minlength=spec.n_arms)
    return switching_losses(counts, spec.scale)[0]


def load_loss_matrix(path, scale: float = 1.0) -> AdversarialSpec:
    """Read a headerless CSV loss matrix, one round per row."""
    rows = []
    try:
        with open(path, newline="") as fh:
            for r, row in enumerate(csv.reader(fh)):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    rows.append([float(c) for c in row])
                except ValueError:
                    bad = next(c for c in row if not _is_float(c))
                    raise IngestionError(
                        f"row {r + 1}: cannot parse {bad!r} as a number") from None
                if len(rows[-1]) != len(rows[0]):
                    raise IngestionError(
                        f"row {r + 1} has {len(rows[-1])} columns, expected {len(rows[0])}")
    except OSError as e:
        raise IngestionError(f"cannot read loss matrix {path}: {e}") from None
    if not rows:
        raise IngestionError(f"{path}: no rounds")
    m = np.array(rows)
    _check_matrix_range(m, scale)
    return AdversarialSpec.from_matrix(m, scale)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


EnvSpec = Union[StochasticSpec, AdversarialSpec]


class LossSource:
    """Per-batch loss stream used by the harness.

    ``losses(t, pull_counts)`` returns the (n_runs, d) losses of round t
    (1-based). Adaptive generators see only past pull counts.
    """

    block = 1024

    def __init__(self, spec: EnvSpec, rngs: Sequence[np.random.Generator]):
        self.spec = spec
        self.rngs = list(rngs)
        self.n_runs = len(self.rngs)
        self._buf = None
        self._start = 0

    def losses(self, t: int, pull_counts: np.ndarray) -> np.ndarray:
        spec = self.spec
        if isinstance(spec, StochasticSpec):
            k = t - 1 - self._start
            if self._buf is None or k >= self._buf.shape[1]:
                self._start = t - 1
                k = 0
                self._buf = np.stack([spec.sample(g, self.block) for g in self.rngs])
            return self._buf[:, k, :]
        if spec.matrix is not None:
            if t > spec.n_rounds:
                raise InvalidState(f"loss matrix has only {spec.n_rounds} rounds")
            return np.broadcast_to(spec.matrix[t - 1], (self.n_runs, spec.n_arms))
        return switching_losses(pull_counts, spec.scale)
