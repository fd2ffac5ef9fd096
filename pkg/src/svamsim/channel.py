"""Narrowband multipath snapshots at the antenna array."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import check_angle, ula_manifold


@dataclass(frozen=True)
class ChannelParams:
    """Transmit power, path list (gain, angle) and per-element noise power."""

    power: float
    paths: tuple[tuple[complex, float], ...]
    noise_variance: float

    def __post_init__(self) -> None:
        if self.power < 0:
            raise ValueError("power must be nonnegative")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")
        if len(self.paths) == 0:
            raise ValueError("at least one propagation path is required")
        paths = tuple((complex(a), check_angle(u)) for a, u in self.paths)
        object.__setattr__(self, "paths", paths)

    @classmethod
    def single_path(
        cls, alpha: complex, u: float, power: float = 1.0, noise_variance: float = 0.0
    ) -> "ChannelParams":
        return cls(power=power, paths=((alpha, u),), noise_variance=noise_variance)


def antenna_snapshot(
    params: ChannelParams, n: int, rng: np.random.Generator
) -> np.ndarray:
    """One length-n array observation: scaled path sum plus circular noise.

    Noiseless parameters skip the generator entirely, so the output is
    deterministic and the stream is left untouched.
    """
    x = np.zeros(n, dtype=complex)
    for alpha, u in params.paths:
        x += alpha * ula_manifold(n, u)
    x *= np.sqrt(params.power)
    if params.noise_variance > 0.0:
        scale = np.sqrt(params.noise_variance / 2.0)
        x += scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return x


def combine(w: np.ndarray, x: np.ndarray) -> complex:
    """Scalar combiner output w^H x."""
    w = np.asarray(w)
    x = np.asarray(x)
    if w.shape != x.shape:
        raise ValueError(f"combiner shape {w.shape} != snapshot shape {x.shape}")
    return complex(np.vdot(w, x))
