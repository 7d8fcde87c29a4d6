"""Audio I/O, STFT/iSTFT and magnitude compression of spectra."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.signal import ShortTimeFFT, check_NOLA, get_window

from .errors import ConfigError, DomainError, WavFormatError
from .tensor import to_channels, to_complex


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise DomainError(f"waveform must be mono, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise DomainError("waveform has non-finite samples")
        if self.sample_rate <= 0:
            raise DomainError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size


# --- STFT -----------------------------------------------------------------

WINDOWS = ("sqrthann", "hann", "boxcar")


@dataclass(frozen=True)
class StftConfig:
    """Frame and hop in samples; the FFT size equals the frame length.

    ``sqrthann`` is the square root of a periodic Hann window. The inverse
    uses the canonical dual window, so any configuration that passes the
    nonzero-overlap-add check reconstructs exactly.
    """

    frame: int = 510
    hop: int = 128
    window: str = "sqrthann"

    def __post_init__(self):
        if not (self.frame > self.hop > 0):
            raise ConfigError(f"need frame > hop > 0, got frame={self.frame}, hop={self.hop}")
        if self.window not in WINDOWS:
            raise ConfigError(f"unknown window {self.window!r}; choose from {WINDOWS}")
        if not check_NOLA(self.window_array(), self.frame, self.frame - self.hop):
            raise ConfigError(
                f"window {self.window!r} with frame={self.frame}, hop={self.hop} is not invertible"
            )

    def window_array(self) -> np.ndarray:
        if self.window == "sqrthann":
            return np.sqrt(get_window("hann", self.frame))
        return get_window(self.window, self.frame)


@lru_cache(maxsize=16)
def _transform(cfg: StftConfig, sample_rate: int) -> ShortTimeFFT:
    return ShortTimeFFT(cfg.window_array(), cfg.hop, sample_rate, fft_mode="onesided")


def _samples(w) -> tuple[np.ndarray, int]:
    if isinstance(w, Waveform):
        return w.samples, w.sample_rate
    return np.asarray(w, dtype=float), 16000


def stft(w: Waveform | np.ndarray, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """Complex STFT as a ``(2, F, T)`` real tensor, F = frame // 2 + 1."""
    x, sr = _samples(w)
    if x.size == 0:
        raise DomainError("cannot transform an empty waveform")
    return to_channels(_transform(cfg, sr).stft(x))


def istft(
    spec: np.ndarray, cfg: StftConfig = StftConfig(), length: int | None = None, sample_rate: int = 16000
) -> Waveform:
    x = _transform(cfg, sample_rate).istft(to_complex(spec), k1=length)
    return Waveform(np.real(x), sample_rate)


def spectral_energy(spec: np.ndarray, frame: int) -> float:
    """Energy of the full two-sided spectrum represented by a one-sided tensor."""
    mag2 = np.sum(np.asarray(spec, dtype=float) ** 2, axis=0)
    weights = np.full(mag2.shape[0], 2.0)
    weights[0] = 1.0
    if frame % 2 == 0:
        weights[-1] = 1.0
    return float(np.sum(weights[:, None] * mag2))


# --- magnitude compression ------------------------------------------------


@dataclass(frozen=True)
class ScalingConfig:
    a: float = 0.15
    c: float = 0.5

    def __post_init__(self):
        if not self.a > 0.0:
            raise ConfigError(f"scaling gain a must be positive, got {self.a}")
        if not (0.0 < self.c <= 1.0):
            raise ConfigError(f"compression exponent c must lie in (0, 1], got {self.c}")


def _rescale(spec: np.ndarray, magnitude_map) -> np.ndarray:
    z = to_complex(spec)
    mag = np.abs(z)
    out = np.zeros_like(z)
    nz = mag > 0
    out[nz] = z[nz] * (magnitude_map(mag[nz]) / mag[nz])
    return to_channels(out)


def scale(spec: np.ndarray, cfg: ScalingConfig = ScalingConfig()) -> np.ndarray:
    """Compress magnitudes m -> a m^c, keeping phase."""
    return _rescale(spec, lambda m: cfg.a * m**cfg.c)


def unscale(spec: np.ndarray, cfg: ScalingConfig = ScalingConfig()) -> np.ndarray:
    """Inverse of :func:`scale`: m -> (m / a)^(1/c)."""
    return _rescale(spec, lambda m: (m / cfg.a) ** (1.0 / cfg.c))


# --- WAV ------------------------------------------------------------------

_PCM = 1
_FLOAT = 3
_EXTENSIBLE = 0xFFFE


def load_wav(path: str | Path, downmix: bool = False) -> Waveform:
    """Read a mono PCM16 or 32-bit float RIFF/WAVE file.

    Multichannel input is rejected unless ``downmix`` is set, in which case
    the channels are averaged.
    """
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise WavFormatError("file too short for a RIFF header", len(data))
    riff, _, wave = struct.unpack_from("<4sI4s", data, 0)
    if riff != b"RIFF" or wave != b"WAVE":
        raise WavFormatError("not a RIFF/WAVE file", 0)

    fmt = None
    payload = None
    pos = 12
    while pos < len(data):
        if pos + 8 > len(data):
            raise WavFormatError("truncated chunk header", pos)
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = pos + 8
        if body + size > len(data):
            raise WavFormatError(f"chunk {cid!r} declares {size} bytes past end of file", body)
        if cid == b"fmt ":
            if size < 16:
                raise WavFormatError("fmt chunk too short", body)
            tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", data, body)
            if tag == _EXTENSIBLE and size >= 40:
                tag = struct.unpack_from("<H", data, body + 24)[0]
            fmt = (tag, channels, rate, block_align, bits)
        elif cid == b"data":
            payload = (body, data[body : body + size])
        pos = body + size + (size & 1)

    if fmt is None:
        raise WavFormatError("missing fmt chunk", pos)
    if payload is None:
        raise WavFormatError("missing data chunk", pos)
    tag, channels, rate, block_align, bits = fmt
    offset, raw = payload
    if (tag, bits) == (_PCM, 16):
        dtype, norm = np.dtype("<i2"), 32768.0
    elif (tag, bits) == (_FLOAT, 32):
        dtype, norm = np.dtype("<f4"), 1.0
    else:
        raise WavFormatError(f"unsupported encoding (format tag {tag}, {bits} bits)", offset)
    if channels < 1 or block_align != channels * dtype.itemsize:
        raise WavFormatError(f"inconsistent block alignment {block_align}", offset)
    if len(raw) % block_align:
        raise WavFormatError("data chunk is not a whole number of frames", offset + len(raw))

    frames = np.frombuffer(raw, dtype=dtype).reshape(-1, channels).astype(float) / norm
    if channels > 1:
        if not downmix:
            raise WavFormatError(f"expected mono audio, got {channels} channels", offset)
        frames = frames.mean(axis=1, keepdims=True)
    return Waveform(frames[:, 0], rate)


def save_wav(path: str | Path, w: Waveform, encoding: str = "float32") -> None:
    """Write mono audio as ``float32`` or ``pcm16`` (clipped to [-1, 1))."""
    if encoding == "float32":
        tag, bits = _FLOAT, 32
        raw = w.samples.astype("<f4").tobytes()
    elif encoding == "pcm16":
        tag, bits = _PCM, 16
        q = np.clip(np.round(w.samples * 32768.0), -32768, 32767)
        raw = q.astype("<i2").tobytes()
    else:
        raise ConfigError(f"unknown WAV encoding {encoding!r}")
    nbytes = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, w.sample_rate, w.sample_rate * nbytes, nbytes, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(raw)) + raw + (b"\0" if len(raw) & 1 else b"")
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
