"""Two-channel real representation of complex spectrograms.

A spectro tensor is a float array of shape ``(2, F, T)``: channel 0 holds
the real part and channel 1 the imaginary part. The diffusion code is
entrywise, so it also accepts any other real array shape.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeMismatchError


def to_channels(spec: np.ndarray) -> np.ndarray:
    spec = np.asarray(spec)
    return np.stack([spec.real, spec.imag]).astype(float)


def to_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim < 1 or x.shape[0] != 2:
        raise ShapeMismatchError(f"expected a leading channel axis of size 2, got shape {x.shape}")
    return x[0] + 1j * x[1]


def check_finite(x: np.ndarray, name: str = "tensor") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise DomainError(f"{name} is empty")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} has non-finite entries")
    return x


def check_same_shape(**arrays: np.ndarray) -> None:
    shapes = {name: np.shape(a) for name, a in arrays.items()}
    if len(set(shapes.values())) > 1:
        raise ShapeMismatchError(f"shape mismatch: {shapes}")
