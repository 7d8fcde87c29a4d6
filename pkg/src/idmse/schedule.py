"""Coefficient schedules for interpolation diffusion.

Every schedule describes the marginal

    x(t) = alpha_t * (lambda_t * x0 + (1 - lambda_t) * y) + G(t) * z

together with the diffusion rate g(t) of the SDE that produces it. The
noise scale G and the rate g are tied by the linear ODE

    d(G^2)/dt = 2 G^2 (ln alpha_t lambda_t)' + g^2.

Three families are provided: :class:`VpSchedule` (variance preserving,
G^2 = 1 - alpha_t^2), :class:`VeSchedule` (alpha_t = 1, closed-form G) and
:class:`IdmSchedule`, which takes arbitrary coefficient callables and
integrates the ODE numerically.

All functions accept a scalar or an array of times in [0, 1] and return
values of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, Union

import numpy as np
from scipy import integrate

from .errors import DomainError, ScheduleInconsistencyError

TimeLike = Union[float, np.ndarray]


def _as_time(t: TimeLike) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)) or np.any((t < 0.0) | (t > 1.0)):
        raise DomainError(f"time must lie in [0, 1], got {t}")
    return t


def _sqrt_checked(radicand: np.ndarray, what: str) -> np.ndarray:
    # tolerate round-off below zero, reject real inconsistencies
    if np.any(radicand < -1e-12):
        raise ScheduleInconsistencyError(f"negative radicand in {what}: {np.min(radicand)}")
    return np.sqrt(np.maximum(radicand, 0.0))


class Schedule(Protocol):
    """What the diffusion and sampler modules need from a schedule."""

    def alpha(self, t: TimeLike) -> TimeLike: ...

    def lambda_interp(self, t: TimeLike) -> TimeLike: ...

    def big_g(self, t: TimeLike) -> TimeLike: ...

    def small_g(self, t: TimeLike) -> TimeLike: ...

    def dlog_alpha(self, t: TimeLike) -> TimeLike: ...

    def dlog_lambda(self, t: TimeLike) -> TimeLike: ...


@dataclass(frozen=True)
class LinearBeta:
    beta_min: float = 0.1
    beta_max: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.beta_min <= self.beta_max):
            raise DomainError(
                f"need 0 < beta_min <= beta_max, got {self.beta_min}, {self.beta_max}"
            )

    def __call__(self, t: TimeLike) -> TimeLike:
        t = _as_time(t)
        return ((self.beta_max - self.beta_min) * t + self.beta_min)[()]

    def integral(self, t: TimeLike) -> TimeLike:
        """Closed-form antiderivative of beta from 0 to t."""
        t = _as_time(t)
        return (0.5 * (self.beta_max - self.beta_min) * t**2 + self.beta_min * t)[()]


@dataclass(frozen=True)
class VpSchedule:
    """Variance-preserving interpolation schedule.

    alpha_t = exp(-0.5 * int_0^t beta), lambda_t = exp(-lambda_rate * t) and
    G(t) = sqrt(1 - alpha_t^2).
    """

    beta: LinearBeta = LinearBeta()
    lambda_rate: float = 1.5

    def __post_init__(self):
        if not self.lambda_rate >= 0.0:
            raise DomainError(f"lambda_rate must be non-negative, got {self.lambda_rate}")

    @property
    def kind(self) -> str:
        return "vp"

    def alpha(self, t: TimeLike) -> TimeLike:
        return np.exp(-0.5 * np.asarray(self.beta.integral(t)))[()]

    def lambda_interp(self, t: TimeLike) -> TimeLike:
        return np.exp(-self.lambda_rate * _as_time(t))[()]

    def big_g(self, t: TimeLike) -> TimeLike:
        # 1 - exp(-I) via expm1 keeps precision near t = 0
        return np.sqrt(-np.expm1(-np.asarray(self.beta.integral(t))))[()]

    def small_g(self, t: TimeLike) -> TimeLike:
        radicand = self.beta(t) - 2.0 * self.lambda_rate * np.expm1(
            -np.asarray(self.beta.integral(t))
        )
        return _sqrt_checked(np.asarray(radicand), "VP g(t)")[()]

    def dlog_alpha(self, t: TimeLike) -> TimeLike:
        return (-0.5 * np.asarray(self.beta(t)))[()]

    def dlog_lambda(self, t: TimeLike) -> TimeLike:
        return np.full_like(_as_time(t), -self.lambda_rate)[()]


@dataclass(frozen=True)
class VeSchedule:
    """Variance-exploding interpolation schedule (alpha_t = 1).

    G(t)^2 = L sigma_min^2 ((sigma_max/sigma_min)^(2t) - exp(-2 lambda t)) / (lambda + L)
    with L = ln(sigma_max/sigma_min), and g(t) = sigma_min (sigma_max/sigma_min)^t sqrt(2L).
    """

    sigma_min: float = 0.05
    sigma_max: float = 0.5
    lambda_rate: float = 1.5

    def __post_init__(self):
        if not (0.0 < self.sigma_min < self.sigma_max):
            raise DomainError(
                f"need 0 < sigma_min < sigma_max, got {self.sigma_min}, {self.sigma_max}"
            )
        if not self.lambda_rate >= 0.0:
            raise DomainError(f"lambda_rate must be non-negative, got {self.lambda_rate}")

    @property
    def kind(self) -> str:
        return "ve"

    @property
    def log_ratio(self) -> float:
        return math.log(self.sigma_max / self.sigma_min)

    def alpha(self, t: TimeLike) -> TimeLike:
        return np.ones_like(_as_time(t))[()]

    def lambda_interp(self, t: TimeLike) -> TimeLike:
        return np.exp(-self.lambda_rate * _as_time(t))[()]

    def big_g(self, t: TimeLike) -> TimeLike:
        t = _as_time(t)
        L = self.log_ratio
        ratio = self.sigma_max / self.sigma_min
        radicand = (
            L * self.sigma_min**2 * (ratio ** (2 * t) - np.exp(-2 * self.lambda_rate * t))
            / (self.lambda_rate + L)
        )
        return _sqrt_checked(radicand, "VE G(t)")[()]

    def small_g(self, t: TimeLike) -> TimeLike:
        t = _as_time(t)
        ratio = self.sigma_max / self.sigma_min
        return (self.sigma_min * ratio**t * math.sqrt(2 * self.log_ratio))[()]

    def dlog_alpha(self, t: TimeLike) -> TimeLike:
        return np.zeros_like(_as_time(t))[()]

    def dlog_lambda(self, t: TimeLike) -> TimeLike:
        return np.full_like(_as_time(t), -self.lambda_rate)[()]


ScalarFn = Callable[[float], float]


@dataclass(frozen=True)
class IdmSchedule:
    """General interpolation schedule built from coefficient callables.

    ``alpha_fn``, ``lambda_fn`` and ``g_fn`` map a scalar time to a scalar;
    ``dlog_alpha_fn`` and ``dlog_lambda_fn`` are their analytic log-derivatives.
    G(t) solves the coupling ODE from ``big_g0`` by quadrature of its
    integrating-factor solution.
    """

    alpha_fn: ScalarFn
    lambda_fn: ScalarFn
    g_fn: ScalarFn
    dlog_alpha_fn: ScalarFn
    dlog_lambda_fn: ScalarFn
    big_g0: float = 0.0

    @classmethod
    def from_schedule(cls, s: Schedule) -> "IdmSchedule":
        return cls(
            alpha_fn=lambda t: float(s.alpha(t)),
            lambda_fn=lambda t: float(s.lambda_interp(t)),
            g_fn=lambda t: float(s.small_g(t)),
            dlog_alpha_fn=lambda t: float(s.dlog_alpha(t)),
            dlog_lambda_fn=lambda t: float(s.dlog_lambda(t)),
            big_g0=float(s.big_g(0.0)),
        )

    @property
    def kind(self) -> str:
        return "idm"

    def _map(self, fn: ScalarFn, t: TimeLike) -> TimeLike:
        t = _as_time(t)
        return np.vectorize(fn, otypes=[float])(t)[()]

    def alpha(self, t: TimeLike) -> TimeLike:
        return self._map(self.alpha_fn, t)

    def lambda_interp(self, t: TimeLike) -> TimeLike:
        return self._map(self.lambda_fn, t)

    def small_g(self, t: TimeLike) -> TimeLike:
        return self._map(self.g_fn, t)

    def dlog_alpha(self, t: TimeLike) -> TimeLike:
        return self._map(self.dlog_alpha_fn, t)

    def dlog_lambda(self, t: TimeLike) -> TimeLike:
        return self._map(self.dlog_lambda_fn, t)

    def big_g_squared(self, t: float) -> float:
        def scale_sq(u):
            return (self.alpha_fn(u) * self.lambda_fn(u)) ** 2

        integral, _ = integrate.quad(
            lambda u: self.g_fn(u) ** 2 / scale_sq(u), 0.0, t, epsabs=1e-13, epsrel=1e-12, limit=200
        )
        return scale_sq(t) * (self.big_g0**2 / scale_sq(0.0) + integral)

    def big_g(self, t: TimeLike) -> TimeLike:
        t = _as_time(t)
        g2 = np.vectorize(self.big_g_squared, otypes=[float])(t)
        return _sqrt_checked(g2, "IDM G(t)")[()]


def ode_residual(s: Schedule, t: float, h: float = 1e-5) -> float:
    """Mismatch of the coupling ODE at ``t``.

    The left side d(G^2)/dt is a centered difference with step ``h``; the
    log-derivatives on the right side are analytic.
    """
    if not (0.0 <= t - h and t + h <= 1.0 and h > 0.0):
        raise DomainError(f"need 0 <= t-h < t+h <= 1, got t={t}, h={h}")
    lhs = (float(s.big_g(t + h)) ** 2 - float(s.big_g(t - h)) ** 2) / (2 * h)
    g_sq = float(s.big_g(t)) ** 2
    rhs = 2 * g_sq * (float(s.dlog_alpha(t)) + float(s.dlog_lambda(t))) + float(s.small_g(t)) ** 2
    return abs(lhs - rhs)


def ve_general_solution_check(s: VeSchedule, t: float) -> float:
    """|closed-form G^2(t) - lambda_t^2 int_0^t g^2 / lambda_tau^2| for G(0) = 0."""
    t = float(_as_time(t))
    integral, _ = integrate.quad(
        lambda u: float(s.small_g(u)) ** 2 / float(s.lambda_interp(u)) ** 2,
        0.0,
        t,
        epsabs=1e-10,
        epsrel=1e-12,
    )
    general = float(s.lambda_interp(t)) ** 2 * integral
    return abs(float(s.big_g(t)) ** 2 - general)


def snr_of_t(s: VpSchedule, t: float) -> tuple[float, float]:
    """Noise level of x(t) in dB: (exact 10 log10 G^2, small-t 10 log10(beta_min t))."""
    if not (0.0 < t <= 1.0):
        raise DomainError(f"snr_of_t needs 0 < t <= 1, got {t}")
    exact = 10.0 * math.log10(float(s.big_g(t)) ** 2)
    approx = 10.0 * (math.log10(s.beta.beta_min) + math.log10(t))
    return exact, approx


def steps_for_epsilon(epsilon: float, multiple: int = 5) -> int:
    """Reverse step count K for a minimum time ``epsilon``.

    K is 1/epsilon rounded down to a multiple of ``multiple``, which gives
    100, 30, 25, 20, 15, 10 for epsilon = 0.01, 0.03, 0.04, 0.05, 0.06, 0.1.
    Falls back to plain rounding when that would give zero steps.
    """
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    inv = 1.0 / epsilon
    k = int(math.floor(inv / multiple + 1e-9)) * multiple
    return k if k > 0 else max(1, round(inv))


def schedule_table(s: Schedule, n_points: int = 1000) -> dict[str, np.ndarray]:
    """Tabulate every coefficient on a uniform grid over [0, 1]."""
    if n_points < 2:
        raise DomainError("schedule table needs at least two points")
    t = np.linspace(0.0, 1.0, n_points)
    beta = s.beta(t) if isinstance(s, VpSchedule) else np.full_like(t, np.nan)
    return {
        "t": t,
        "beta": np.asarray(beta),
        "alpha": np.asarray(s.alpha(t)),
        "lambda": np.asarray(s.lambda_interp(t)),
        "big_g": np.asarray(s.big_g(t)),
        "small_g": np.asarray(s.small_g(t)),
    }
