"""Discrete variance-preserving noise schedules.

Arrays are stored in diffusion-time order: index i corresponds to timestep
i+1, so ``alphas_bar[i]`` is the cumulative product of (1 - beta) over the
first i+1 timesteps and decreases as i grows. Sampling walks the timesteps
backwards; accessors taking a *sampling step* s (0 = noisiest, T-1 = last
denoise) translate internally.

The continuous clock used by guidance scale functions is linear in the step
index, t = remaining / (T - 1): t = 1 at the first sampling step, t = 0 at
the last, independent of the beta values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    betas: np.ndarray = field(repr=False)
    alphas_bar: np.ndarray = field(repr=False)

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        ab = np.asarray(self.alphas_bar, dtype=np.float64)
        if betas.ndim != 1 or betas.size < 2:
            raise ValueError("need at least 2 steps of betas")
        if not (np.all(betas > 0.0) and np.all(betas < 1.0)):
            raise ValueError("betas must lie in (0, 1)")
        if ab.shape != betas.shape:
            raise ValueError("alphas_bar length must match betas")
        expected = np.cumprod(1.0 - betas)
        if not np.allclose(ab, expected, rtol=1e-12, atol=0.0):
            raise ValueError("alphas_bar is not the prefix product of (1 - beta)")
        if not np.all(np.diff(ab) < 0.0):
            raise ValueError("alphas_bar must strictly decrease in diffusion time")
        for arr in (betas, ab):
            arr.flags.writeable = False
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas_bar", ab)

    @property
    def num_steps(self) -> int:
        return int(self.betas.size)

    def _timestep(self, step: int) -> int:
        if not 0 <= step < self.num_steps:
            raise ValueError(f"step {step} out of range [0, {self.num_steps})")
        return self.num_steps - step  # 1-based diffusion timestep

    def t_of(self, step: int) -> float:
        """Continuous time at a sampling step: 1 at the first, 0 at the last."""
        tau = self._timestep(step)
        return float((tau - 1) / (self.num_steps - 1))

    def step_of_t(self, t: float) -> int:
        """Sampling step whose clock value is closest to t."""
        steps = np.arange(self.num_steps)
        return int(np.argmin(np.abs((self.num_steps - 1 - steps) / (self.num_steps - 1) - t)))

    def beta(self, step: int) -> float:
        return float(self.betas[self._timestep(step) - 1])

    def alpha_bar(self, step: int) -> float:
        return float(self.alphas_bar[self._timestep(step) - 1])

    def alpha_bar_prev(self, step: int) -> float:
        """alpha_bar one timestep cleaner; 1 at the final denoising step."""
        tau = self._timestep(step)
        return float(self.alphas_bar[tau - 2]) if tau > 1 else 1.0


def linear_beta_schedule(num_steps: int, beta_min: float, beta_max: float) -> NoiseSchedule:
    if num_steps < 2:
        raise ValueError(f"num_steps must be >= 2, got {num_steps}")
    if not 0.0 < beta_min <= beta_max < 1.0:
        raise ValueError(f"need 0 < beta_min <= beta_max < 1, got {beta_min}, {beta_max}")
    betas = np.linspace(beta_min, beta_max, num_steps)
    return NoiseSchedule(betas=betas, alphas_bar=np.cumprod(1.0 - betas))


def t_of(schedule: NoiseSchedule, step: int) -> float:
    return schedule.t_of(step)
