"""Waveform-level wiring of STFT, scaling and the reverse sampler."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .diffusion import OracleScore, ScoreModel, marginal_mean, sample_marginal
from .errors import ShapeMismatchError
from .sampler import SamplerGrid, euler_forward, reverse_trajectory
from .signal import Waveform, istft, scale, stft, unscale


def analyze(w: Waveform, cfg: RunConfig) -> np.ndarray:
    """Waveform -> scaled two-channel spectrogram."""
    return scale(stft(w, cfg.stft_config()), cfg.scaling())


def synthesize(x: np.ndarray, cfg: RunConfig, length: int, sample_rate: int) -> Waveform:
    return istft(unscale(x, cfg.scaling()), cfg.stft_config(), length, sample_rate)


def analyze_pair(clean: Waveform, noisy: Waveform, cfg: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    if len(clean) != len(noisy) or clean.sample_rate != noisy.sample_rate:
        raise ShapeMismatchError(
            f"clean/noisy differ: {len(clean)} vs {len(noisy)} samples, "
            f"{clean.sample_rate} vs {noisy.sample_rate} Hz"
        )
    return analyze(clean, cfg), analyze(noisy, cfg)


@dataclass
class Enhancement:
    waveform: Waveform
    estimate: np.ndarray
    grid: SamplerGrid
    path: list[np.ndarray] | None


def enhance(
    noisy: Waveform,
    model: ScoreModel,
    cfg: RunConfig,
    rng: np.random.Generator,
    record: bool = False,
) -> Enhancement:
    y = analyze(noisy, cfg)
    grid = cfg.grid()
    estimate, path = reverse_trajectory(
        y, cfg.build_schedule(), grid, model, rng, cfg.discretization, record
    )
    out = synthesize(estimate, cfg, len(noisy), noisy.sample_rate)
    return Enhancement(out, estimate, grid, path)


def enhance_oracle(
    clean: Waveform, noisy: Waveform, cfg: RunConfig, rng: np.random.Generator, record: bool = False
) -> Enhancement:
    """Reverse sampling driven by the exact conditional score (validation only)."""
    x0, _ = analyze_pair(clean, noisy, cfg)
    return enhance(noisy, OracleScore(cfg.build_schedule(), x0), cfg, rng, record)


def forward_states(
    clean: Waveform, noisy: Waveform, cfg: RunConfig, times, rng: np.random.Generator
) -> dict[float, dict[str, np.ndarray]]:
    """Closed-form x(t) (and its mean) at each requested time."""
    x0, y = analyze_pair(clean, noisy, cfg)
    s = cfg.build_schedule()
    out = {}
    for t in times:
        xt, _ = sample_marginal(x0, y, s, t, rng)
        out[float(t)] = {"state": xt, "mean": marginal_mean(x0, y, s, t)}
    return out


def forward_path(
    clean: Waveform, noisy: Waveform, cfg: RunConfig, steps: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Euler-Maruyama path of the forward SDE from t = 0 to 1."""
    x0, y = analyze_pair(clean, noisy, cfg)
    _, path = euler_forward(x0, y, cfg.build_schedule(), SamplerGrid(0.0, steps), rng)
    return path
