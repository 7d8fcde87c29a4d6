"""SDE coefficients, forward Euler-Maruyama and the reverse sampler.

The reverse update from grid index k to k-1 is

    x_{k-1} = x_k - [f(x_k, y, t_k) - w_k * theta(x_k)] * delta + g(t_k) sqrt(delta) z

with the score weight w_k chosen by ``discretization``:

* ``"literal"``: w_k = g(t_k)^2 * delta, which is what results when the discrete
  g_k = g(t_k) sqrt(delta) is squared inside the bracket;
* ``"standard"``: w_k = g(t_k)^2, the usual Euler-Maruyama step of the
  reverse-time SDE.

The last step (index 1 to 0) never adds noise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .diffusion import ScoreModel
from .errors import DomainError, ShapeMismatchError
from .schedule import Schedule, VeSchedule, VpSchedule, steps_for_epsilon
from .tensor import check_finite, check_same_shape

Discretization = Literal["literal", "standard"]
DISCRETIZATIONS = ("literal", "standard")


@dataclass(frozen=True)
class SamplerGrid:
    """Uniform grid t_k = epsilon + (1 - epsilon) k / K for k = 0..K."""

    epsilon: float
    steps: int

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise DomainError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise DomainError(f"step count must be a positive integer, got {self.steps}")

    @classmethod
    def from_epsilon(cls, epsilon: float = 0.04, steps: int | None = None) -> "SamplerGrid":
        return cls(epsilon, steps if steps is not None else steps_for_epsilon(epsilon))

    @property
    def delta(self) -> float:
        return (1.0 - self.epsilon) / self.steps

    @cached_property
    def times(self) -> np.ndarray:
        # linspace pins both endpoints exactly
        return np.linspace(self.epsilon, 1.0, self.steps + 1)

    def t(self, k: int) -> float:
        return float(self.times[k])


def drift(s: Schedule, x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
    """Forward drift f(x, y, t) in the closed form of each schedule family."""
    check_same_shape(x=x, y=y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(s, VpSchedule):
        lam = s.lambda_rate
        return -(0.5 * float(s.beta(t)) + lam) * x + lam * float(s.alpha(t)) * y
    if isinstance(s, VeSchedule):
        return s.lambda_rate * (y - x)
    return idm_drift(s, x, y, t)


def idm_drift(s: Schedule, x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
    """General drift x (ln alpha lambda)' - y alpha (ln lambda)'."""
    check_same_shape(x=x, y=y)
    dlog_lam = float(s.dlog_lambda(t))
    return (
        np.asarray(x, dtype=float) * (float(s.dlog_alpha(t)) + dlog_lam)
        - np.asarray(y, dtype=float) * float(s.alpha(t)) * dlog_lam
    )


def diffusion_rate(s: Schedule, t: float) -> float:
    return float(s.small_g(t))


def euler_forward(
    x0: np.ndarray,
    y: np.ndarray,
    s: Schedule,
    grid: SamplerGrid,
    rng: np.random.Generator,
    record: bool = True,
) -> tuple[np.ndarray, list[np.ndarray] | None]:
    """Simulate the forward SDE from x0 at t_0 to t_K = 1.

    Arrays may carry extra leading axes (e.g. independent paths) as long as
    x0 and y share a shape. Returns the final state and, if ``record``, the
    list of states at every grid point.
    """
    check_same_shape(x0=x0, y=y)
    x = np.array(x0, dtype=float)
    y = np.asarray(y, dtype=float)
    sqrt_dt = math.sqrt(grid.delta)
    path = [x.copy()] if record else None
    for k in range(grid.steps):
        t = grid.t(k)
        x = x + drift(s, x, y, t) * grid.delta + diffusion_rate(s, t) * sqrt_dt * rng.standard_normal(x.shape)
        if record:
            path.append(x.copy())
    return x, path


def initial_state(y: np.ndarray, s: Schedule, rng: np.random.Generator) -> np.ndarray:
    """Reverse-process start alpha_1 y + G(1) z (alpha_1 = 1 for VE)."""
    y = np.asarray(y, dtype=float)
    return float(s.alpha(1.0)) * y + float(s.big_g(1.0)) * rng.standard_normal(y.shape)


def reverse_step(
    xk: np.ndarray,
    y: np.ndarray,
    theta: np.ndarray,
    s: Schedule,
    grid: SamplerGrid,
    k: int,
    rng: np.random.Generator | None,
    discretization: Discretization = "standard",
    add_noise: bool = True,
) -> np.ndarray:
    """One reverse update from grid index k to k - 1."""
    if not (1 <= k <= grid.steps):
        raise DomainError(f"step index {k} outside 1..{grid.steps}")
    if discretization not in DISCRETIZATIONS:
        raise DomainError(f"unknown discretization {discretization!r}")
    check_same_shape(xk=xk, theta=theta)
    t = grid.t(k)
    dt = grid.delta
    g = diffusion_rate(s, t)
    weight = g**2 * dt if discretization == "literal" else g**2
    out = np.asarray(xk, dtype=float) - (drift(s, xk, y, t) - weight * np.asarray(theta)) * dt
    if add_noise:
        out = out + g * math.sqrt(dt) * rng.standard_normal(out.shape)
    return out


def reverse_trajectory(
    y: np.ndarray,
    s: Schedule,
    grid: SamplerGrid,
    model: ScoreModel,
    rng: np.random.Generator,
    discretization: Discretization = "standard",
    record: bool = False,
) -> tuple[np.ndarray, list[np.ndarray] | None]:
    """Enhance ``y`` by running the reverse process from t = 1 down to epsilon.

    Returns the estimate and, if ``record``, the states x_K, ..., x_1 followed
    by the estimate.
    """
    y = check_finite(y, "conditioner y")
    x = initial_state(y, s, rng)
    path = [x] if record else None
    for k in range(grid.steps, 0, -1):
        theta = np.asarray(model.evaluate(x, y, grid.t(k)), dtype=float)
        if theta.shape != x.shape:
            raise ShapeMismatchError(f"model returned shape {theta.shape}, expected {x.shape}")
        x = reverse_step(x, y, theta, s, grid, k, rng, discretization, add_noise=k > 1)
        if record:
            path.append(x)
    return x, path


def initial_error(
    x0: np.ndarray, y: np.ndarray, s: Schedule, variant: str | None = None
) -> np.ndarray:
    """Gap between the practical reverse start and the true terminal state.

    ``"ve"`` starts from y + G(1) z and gives lambda_1 (y - x0); ``"vp"`` starts
    from alpha_1 y + G(1) z and gives alpha_1 lambda_1 (y - x0). The variant
    defaults to the schedule's own kind.
    """
    check_same_shape(x0=x0, y=y)
    variant = variant or getattr(s, "kind", "idm")
    ie = float(s.lambda_interp(1.0)) * (np.asarray(y, dtype=float) - np.asarray(x0, dtype=float))
    if variant == "ve":
        return ie
    if variant in ("vp", "idm"):
        return float(s.alpha(1.0)) * ie
    raise DomainError(f"unknown initial-error variant {variant!r}")


def write_trajectory_csv(path: str | Path, grid: SamplerGrid, states: Sequence[np.ndarray]) -> None:
    """Per-step summary of a reverse path (states ordered from k = K down to 0)."""
    if len(states) != grid.steps + 1:
        raise ShapeMismatchError(f"expected {grid.steps + 1} states, got {len(states)}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "t_k", "l2_norm", "mean", "std", "max_abs"])
        for k, x in zip(range(grid.steps, -1, -1), states):
            w.writerow([k, repr(grid.t(k)), repr(float(np.linalg.norm(x))), repr(float(np.mean(x))),
                        repr(float(np.std(x))), repr(float(np.max(np.abs(x))))])


def save_trajectory(path: str | Path, states: Sequence[np.ndarray]) -> None:
    """Raw path as a single .npy array with a leading step axis."""
    np.save(path, np.stack(states))
