"""Deterministic counter-based noise streams.

Every draw is a pure function of (seed, step, stream, lane). The Philox
generator is keyed directly from those four values instead of being advanced
statefully, so adding or removing consumers of one stream can never shift the
values seen by another: runs that differ only in extra guidance terms reuse
bit-identical noise.

Lanes address independent samples inside one (seed, step, stream) triple:
lane i owns positions [i*volume, (i+1)*volume) of that stream, which makes a
batched draw for lanes 0..n-1 a single generator call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field, Shape

SAMPLER_NOISE = "sampler_noise"
INIT_LATENT = "init_latent"
DIAGNOSTICS = "diagnostics"

_STREAM_IDS = {SAMPLER_NOISE: 0, INIT_LATENT: 1, DIAGNOSTICS: 2}
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseKey:
    seed: int
    step: int
    stream: str
    lane: int = 0

    def __post_init__(self):
        if self.stream not in _STREAM_IDS:
            raise ValueError(f"unknown stream {self.stream!r}")
        if self.step < 0 or self.lane < 0:
            raise ValueError("step and lane must be non-negative")


def _generator(seed: int, step: int, stream: str) -> np.random.Generator:
    key = np.array([seed & _MASK64, _STREAM_IDS[stream]], dtype=np.uint64)
    # step occupies the high counter words: each step owns 2^128 blocks.
    return np.random.Generator(np.random.Philox(key=key, counter=int(step) << 128))


def draw_noise_batch(
    seed: int, step: int, stream: str, lanes: int, shape: Shape
) -> np.ndarray:
    """Standard-normal draws for lanes 0..lanes-1, shaped (lanes, volume)."""
    NoiseKey(seed, step, stream)  # validate
    if lanes < 1:
        raise ValueError("lanes must be >= 1")
    return _generator(seed, step, stream).standard_normal((lanes, shape.volume))


def draw_noise(key: NoiseKey, shape: Shape) -> Field:
    """The lane's standard-normal field; identical for identical (key, shape)."""
    block = draw_noise_batch(key.seed, key.step, key.stream, key.lane + 1, shape)
    return Field(shape, block[-1])
