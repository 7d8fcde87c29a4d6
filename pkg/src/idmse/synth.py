"""Synthetic speech-like test signals."""

from __future__ import annotations

import numpy as np

from .signal import Waveform


def voiced_signal(rng: np.random.Generator, seconds: float = 1.0, sample_rate: int = 16000) -> np.ndarray:
    """Harmonic source with a gliding pitch under a syllabic on/off envelope."""
    n = int(seconds * sample_rate)
    t = np.arange(n) / sample_rate
    f0 = rng.uniform(100, 220) * (1 + 0.1 * np.sin(2 * np.pi * rng.uniform(1, 3) * t))
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    x = sum(np.sin(h * phase + rng.uniform(0, 2 * np.pi)) / h for h in range(1, 16))
    rate = rng.uniform(3, 5)
    envelope = np.clip(np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi)), 0, None) ** 2
    x = x * envelope
    return 0.5 * x / np.max(np.abs(x))


def noisy_pair(
    rng: np.random.Generator, snr_db: float = 0.0, seconds: float = 1.0, sample_rate: int = 16000
) -> tuple[Waveform, Waveform]:
    """Clean voiced signal and the same signal plus white noise at ``snr_db``."""
    clean = voiced_signal(rng, seconds, sample_rate)
    noise = rng.standard_normal(clean.size)
    noise *= np.sqrt(np.sum(clean**2) / np.sum(noise**2) / 10 ** (snr_db / 10))
    return Waveform(clean, sample_rate), Waveform(clean + noise, sample_rate)
