"""Forward process: marginals, conditional score and the training loss."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import DegenerateTimeError, DomainError, IdmError, ShapeMismatchError
from .schedule import Schedule
from .tensor import check_same_shape

G_FLOOR = 1e-6


class ScoreModel(Protocol):
    """Anything that estimates the score of x(t) given the noisy conditioner."""

    def evaluate(self, xt: np.ndarray, y: np.ndarray, t: float) -> np.ndarray: ...


@dataclass(frozen=True)
class TrainingExample:
    x0: np.ndarray
    y: np.ndarray
    t: float
    z: np.ndarray
    xt: np.ndarray


def marginal_mean(x0: np.ndarray, y: np.ndarray, s: Schedule, t: float) -> np.ndarray:
    check_same_shape(x0=x0, y=y)
    a = float(s.alpha(t))
    lam = float(s.lambda_interp(t))
    return a * lam * np.asarray(x0, dtype=float) + a * (1.0 - lam) * np.asarray(y, dtype=float)


def sample_marginal(
    x0: np.ndarray, y: np.ndarray, s: Schedule, t: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw x(t) from its closed form; returns ``(xt, z)``."""
    mean = marginal_mean(x0, y, s, t)
    z = rng.standard_normal(mean.shape)
    return mean + float(s.big_g(t)) * z, z


def conditional_score(
    xt: np.ndarray, x0: np.ndarray, y: np.ndarray, s: Schedule, t: float
) -> np.ndarray:
    """Gradient of log p(x(t) | x0, y), i.e. -(xt - mean) / G(t)^2."""
    check_same_shape(xt=xt, x0=x0)
    g = float(s.big_g(t))
    if g < G_FLOOR:
        raise DegenerateTimeError(f"G({t}) = {g:.3g} is below the floor {G_FLOOR}")
    return -(np.asarray(xt, dtype=float) - marginal_mean(x0, y, s, t)) / g**2


class OracleScore:
    """Exact conditional score for a known clean signal.

    Only useful for validation: it needs the clean reference that a real
    enhancement system would not have.
    """

    def __init__(self, schedule: Schedule, clean: np.ndarray):
        self.schedule = schedule
        self.clean = np.asarray(clean, dtype=float)

    def evaluate(self, xt, y, t):
        return conditional_score(xt, self.clean, y, self.schedule, t)


class BatchOracleScore:
    """Exact score for every (x0, y) pair of a batch, looked up by y."""

    def __init__(self, schedule: Schedule, batch: Iterable[TrainingExample]):
        self.schedule = schedule
        self._clean = {_key(ex.y): ex.x0 for ex in batch}

    def evaluate(self, xt, y, t):
        try:
            x0 = self._clean[_key(y)]
        except KeyError:
            raise IdmError("conditioner not seen in this batch") from None
        return conditional_score(xt, x0, y, self.schedule, t)


def _key(y: np.ndarray) -> tuple:
    y = np.ascontiguousarray(y, dtype=float)
    return y.shape, y.tobytes()


class ZeroScore:
    def evaluate(self, xt, y, t):
        return np.zeros_like(np.asarray(xt, dtype=float))


def make_training_example(
    x0: np.ndarray, y: np.ndarray, s: Schedule, epsilon: float, rng: np.random.Generator
) -> TrainingExample:
    """Draw t ~ U(epsilon, 1] and the matching state x(t)."""
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    # 1 - U[0, 1 - eps) lands on (eps, 1]
    t = 1.0 - rng.uniform(0.0, 1.0 - epsilon)
    xt, z = sample_marginal(x0, y, s, t, rng)
    return TrainingExample(
        x0=np.asarray(x0, dtype=float), y=np.asarray(y, dtype=float), t=t, z=z, xt=xt
    )


def make_training_batch(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    s: Schedule,
    epsilon: float,
    seed: int | np.random.SeedSequence,
) -> list[TrainingExample]:
    """One example per pair, each drawn from its own child stream of ``seed``.

    Results do not depend on the order in which examples are built.
    """
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = seq.spawn(len(pairs))
    return [
        make_training_example(x0, y, s, epsilon, np.random.default_rng(child))
        for (x0, y), child in zip(pairs, streams)
    ]


def example_loss(example: TrainingExample, model: ScoreModel, s: Schedule) -> float:
    theta = np.asarray(model.evaluate(example.xt, example.y, example.t), dtype=float)
    if theta.shape != example.xt.shape:
        raise ShapeMismatchError(
            f"model returned shape {theta.shape}, expected {example.xt.shape}"
        )
    residual = float(s.big_g(example.t)) * theta + example.z
    return float(np.sum(residual**2))


def batch_loss(batch: Sequence[TrainingExample], model: ScoreModel, s: Schedule) -> float:
    """Weighted score-matching loss: mean over examples of ||G(t) theta + z||^2."""
    if len(batch) == 0:
        raise DomainError("batch is empty")
    return sum(example_loss(ex, model, s) for ex in batch) / len(batch)


_FIELDS = ("x0", "y", "z", "xt")


def save_batch(path: str | Path, batch: Sequence[TrainingExample]) -> None:
    """Write a batch as JSON: per example a shape header and row-major data."""
    records = []
    for ex in batch:
        rec = {"shape": list(ex.x0.shape), "t": ex.t}
        for name in _FIELDS:
            rec[name] = np.asarray(getattr(ex, name), dtype=float).ravel(order="C").tolist()
        records.append(rec)
    Path(path).write_text(json.dumps({"format": "idmse-batch", "version": 1, "examples": records}))


def load_batch(path: str | Path) -> list[TrainingExample]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "idmse-batch":
        raise IdmError(f"{path} is not a training batch file")
    out = []
    for rec in doc["examples"]:
        shape = tuple(rec["shape"])
        arrays = {name: np.asarray(rec[name], dtype=float).reshape(shape) for name in _FIELDS}
        out.append(TrainingExample(t=float(rec["t"]), **arrays))
    return out
