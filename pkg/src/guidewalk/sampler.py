"""Ancestral DDPM and DDIM sampling loops driven by composed guidance.

The loop is vectorized over samples: the latent state is an (n, volume)
array, and every sample's noise comes from its own lane of the keyed noise
stream, so results are independent of batch size, execution order, and how
many guidance terms the run uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import Field, require_same_shape
from .guidance import GuidanceTerm, compose_batch
from .models import ConditionModel
from .noise import INIT_LATENT, SAMPLER_NOISE, draw_noise_batch
from .schedule import NoiseSchedule

DDPM = "ddpm"
DDIM = "ddim"


@dataclass(frozen=True)
class SamplerConfig:
    schedule: NoiseSchedule
    seed: int
    kind: str = DDPM
    eta: float = 0.0
    num_samples: int = 1
    record_trajectory: bool = False
    trajectory_stride: int = 1  # record every k-th step (plus the last)

    def __post_init__(self):
        if self.kind not in (DDPM, DDIM):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must be in [0, 1], got {self.eta}")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.trajectory_stride < 1:
            raise ValueError("trajectory_stride must be >= 1")


@dataclass(frozen=True)
class TrajectoryStep:
    step: int
    t: float
    latent: Field          # state entering the step, before the update
    eps_hat: Field         # composed prediction at that state
    scales: tuple[float, ...]  # per-term temporal scale values at t


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[TrajectoryStep, ...] = field(default=())


def _coeffs(step: int, schedule: NoiseSchedule):
    beta = schedule.beta(step)
    ab = schedule.alpha_bar(step)
    ab_prev = schedule.alpha_bar_prev(step)
    return beta, ab, ab_prev


def ddpm_step_batch(
    x: np.ndarray, eps_hat: np.ndarray, step: int, schedule: NoiseSchedule,
    noise: np.ndarray | None,
) -> np.ndarray:
    beta, ab, ab_prev = _coeffs(step, schedule)
    mean = (x - (beta / math.sqrt(1.0 - ab)) * eps_hat) / math.sqrt(1.0 - beta)
    if step == schedule.num_steps - 1:
        return mean  # zero posterior variance at the final step
    post_var = (1.0 - ab_prev) / (1.0 - ab) * beta
    return mean + math.sqrt(post_var) * noise


def ddim_step_batch(
    x: np.ndarray, eps_hat: np.ndarray, step: int, schedule: NoiseSchedule,
    eta: float, noise: np.ndarray | None,
) -> np.ndarray:
    _, ab, ab_prev = _coeffs(step, schedule)
    x0_pred = (x - math.sqrt(1.0 - ab) * eps_hat) / math.sqrt(ab)
    sigma = eta * math.sqrt((1.0 - ab_prev) / (1.0 - ab)) * math.sqrt(1.0 - ab / ab_prev)
    direction = math.sqrt(max(1.0 - ab_prev - sigma**2, 0.0)) * eps_hat
    out = math.sqrt(ab_prev) * x0_pred + direction
    if sigma > 0.0:
        out = out + sigma * noise
    return out


def ddpm_step(
    x_t: Field, eps_hat: Field, step: int, schedule: NoiseSchedule, noise: Field
) -> Field:
    """One ancestral update x_t -> x_{t-1} with the standard posterior coefficients."""
    shape = require_same_shape(x_t, eps_hat, noise)
    out = ddpm_step_batch(
        x_t.values[None, :], eps_hat.values[None, :], step, schedule,
        noise.values[None, :],
    )
    return Field(shape, out[0])


def ddim_step(
    x_t: Field, eps_hat: Field, step: int, schedule: NoiseSchedule,
    eta: float = 0.0, noise: Field | None = None,
) -> Field:
    """One DDIM update; eta = 0 is deterministic and consumes no noise."""
    shape = require_same_shape(x_t, eps_hat)
    nvals = None
    if eta > 0.0 and step < schedule.num_steps - 1:
        if noise is None:
            raise ValueError("eta > 0 requires a noise field")
        require_same_shape(x_t, noise)
        nvals = noise.values[None, :]
    out = ddim_step_batch(
        x_t.values[None, :], eps_hat.values[None, :], step, schedule, eta, nvals
    )
    return Field(shape, out[0])


def run_sampling(
    model: ConditionModel,
    terms: list[GuidanceTerm],
    config: SamplerConfig,
    progress=None,
) -> tuple[list[Field], list[Trajectory] | None]:
    """Sample the guided model; a pure function of (model, terms, config).

    Initial latents come from lane i of the init stream and per-step noise
    from lane i of the sampler stream, so each sample is untouched by batch
    size or by extra zero-scale guidance terms. Returns the samples and, if
    requested, one recorded trajectory per sample (state before each update,
    the composed prediction there, and the evaluated temporal scales).
    """
    sched = config.schedule
    n = config.num_samples
    shape = model.shape
    x = draw_noise_batch(config.seed, 0, INIT_LATENT, n, shape)
    recorded: list[list[TrajectoryStep]] | None = None
    if config.record_trajectory:
        recorded = [[] for _ in range(n)]
    needs_noise = config.kind == DDPM or config.eta > 0.0
    for step in range(sched.num_steps):
        eps, scales = compose_batch(model, x, step, sched, terms)
        record_this = recorded is not None and (
            step % config.trajectory_stride == 0 or step == sched.num_steps - 1
        )
        if record_this:
            t = sched.t_of(step)
            for i in range(n):
                recorded[i].append(
                    TrajectoryStep(
                        step, t, Field(shape, x[i]), Field(shape, eps[i]), tuple(scales)
                    )
                )
        noise = None
        if needs_noise and step < sched.num_steps - 1:
            noise = draw_noise_batch(config.seed, step, SAMPLER_NOISE, n, shape)
        if config.kind == DDPM:
            x = ddpm_step_batch(x, eps, step, sched, noise)
        else:
            x = ddim_step_batch(x, eps, step, sched, config.eta, noise)
        if progress is not None:
            progress(step + 1, sched.num_steps)
    if not np.all(np.isfinite(x)):
        raise FloatingPointError("sampling diverged to non-finite values")
    samples = [Field(shape, x[i]) for i in range(n)]
    trajectories = None
    if recorded is not None:
        trajectories = [Trajectory(tuple(steps)) for steps in recorded]
    return samples, trajectories
