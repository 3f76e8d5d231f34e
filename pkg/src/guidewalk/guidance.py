"""Guidance scale functions and multi-term guidance composition.

A guidance term pulls the denoising prediction toward one condition:

    g(x, t, c) = f(x, t, c) - f(x, t, null)

and the composed prediction applies one scale function per term,

    f(x, t) = f(x, t, null) + sum_i s_i(t, u, v) * g(x, t, c_i),

where each s_i is a temporal profile times an optional spatial mask. Scales
may be negative (de-emphasis); masks are clamped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError
from .fields import Field, Shape
from . import models as models_mod
from .models import ConditionModel, NULL_CONDITION
from .schedule import NoiseSchedule

CONSTANT = "constant"
RAMP_UP = "ramp_up"
RAMP_DOWN = "ramp_down"
PIECEWISE = "piecewise"


@dataclass(frozen=True)
class TemporalProfile:
    """Time dependence of a guidance scale.

    constant   s(t) = m
    ramp_up    s(t) = max(0, (m/a) * (a - t)); zero until t drops below the
               onset a, reaching m at t = 0 (a < 1 starts late, a > 1 early)
    ramp_down  s(t) = m * t
    piecewise  linear interpolation of (t, s) knots given with strictly
               decreasing t, clamped outside the knot range
    """

    kind: str
    m: float = 0.0
    a: float = 1.0
    knots: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in (CONSTANT, RAMP_UP, RAMP_DOWN, PIECEWISE):
            raise ValueError(f"unknown temporal kind {self.kind!r}")
        if not math.isfinite(self.m):
            raise ValueError("magnitude m must be finite")
        if self.kind == RAMP_UP and not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"onset a must be positive, got {self.a}")
        if self.kind == PIECEWISE:
            knots = tuple((float(t), float(s)) for t, s in self.knots)
            if not knots:
                raise ValueError("piecewise profile needs at least one knot")
            ts = [t for t, _ in knots]
            if any(t1 <= t2 for t1, t2 in zip(ts, ts[1:])):
                raise ValueError("piecewise knots must have strictly decreasing t")
            if not all(math.isfinite(t) and math.isfinite(s) for t, s in knots):
                raise ValueError("piecewise knots must be finite")
            object.__setattr__(self, "knots", knots)

    @classmethod
    def constant(cls, m: float) -> "TemporalProfile":
        return cls(CONSTANT, m=float(m))

    @classmethod
    def ramp_up(cls, m: float, a: float = 1.0) -> "TemporalProfile":
        return cls(RAMP_UP, m=float(m), a=float(a))

    @classmethod
    def ramp_down(cls, m: float) -> "TemporalProfile":
        return cls(RAMP_DOWN, m=float(m))

    @classmethod
    def piecewise(cls, knots) -> "TemporalProfile":
        return cls(PIECEWISE, knots=tuple(knots))

    def value_at(self, t: float) -> float:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t must be in [0, 1], got {t}")
        if self.kind == CONSTANT:
            return self.m
        if self.kind == RAMP_UP:
            return max(0.0, (self.m / self.a) * (self.a - t))
        if self.kind == RAMP_DOWN:
            return self.m * t
        ts = np.array([k[0] for k in reversed(self.knots)])
        ss = np.array([k[1] for k in reversed(self.knots)])
        return float(np.interp(t, ts, ss))

    def with_magnitude(self, m: float) -> "TemporalProfile":
        if self.kind == PIECEWISE:
            raise ValueError("piecewise profiles have no single magnitude to set")
        return TemporalProfile(self.kind, m=float(m), a=self.a)


@dataclass(frozen=True, eq=False)
class SpatialMask:
    """Per-pixel weight in [0, 1]; field is None for the uniform(1) mask."""

    field: Field | None = None

    @classmethod
    def uniform(cls) -> "SpatialMask":
        return cls(None)

    @classmethod
    def from_field(cls, f: Field) -> "SpatialMask":
        if not f.shape.is_grid:
            raise ShapeMismatchError("spatial masks require a grid shape")
        return cls(Field(f.shape, np.clip(f.values, 0.0, 1.0)))

    @property
    def is_uniform(self) -> bool:
        return self.field is None


@dataclass(frozen=True, eq=False)
class GSF:
    """Guidance scale function s(t, u, v) = temporal(t) * mask(u, v)."""

    temporal: TemporalProfile
    mask: SpatialMask = SpatialMask(None)

    def scale_values(self, t: float, shape: Shape) -> np.ndarray:
        """The flat per-location scale vector at time t."""
        s = self.temporal.value_at(t)
        if self.mask.is_uniform:
            return np.full(shape.volume, s)
        if self.mask.field.shape != shape:
            raise ShapeMismatchError(
                f"mask shape {self.mask.field.shape.dims} != latent shape {shape.dims}"
            )
        return s * self.mask.field.values


def eval_gsf(gsf: GSF, t: float, location: tuple[int, int] | None = None) -> float:
    """Scalar scale at (t, u, v); location is required iff the mask is non-uniform."""
    s = gsf.temporal.value_at(t)
    if gsf.mask.is_uniform:
        return s
    if location is None:
        raise ValueError("masked GSF needs a (u, v) location")
    u, v = location
    h, w = gsf.mask.field.shape.dims
    if not (0 <= u < h and 0 <= v < w):
        raise ValueError(f"location {location} outside {h}x{w} grid")
    return s * float(gsf.mask.field.grid_values[u, v])


@dataclass(frozen=True, eq=False)
class GuidanceTerm:
    condition: str
    gsf: GSF

    def __post_init__(self):
        if self.condition == NULL_CONDITION:
            raise ValueError("the null condition cannot carry a guidance term")


def _term_sort_key(term: GuidanceTerm):
    mask = term.gsf.mask
    mask_bytes = b"" if mask.is_uniform else mask.field.values.tobytes()
    tp = term.gsf.temporal
    return (term.condition, tp.kind, tp.m, tp.a, tp.knots, mask_bytes)


def compose_batch(
    model: ConditionModel,
    x: np.ndarray,
    step: int,
    schedule: NoiseSchedule,
    terms: list[GuidanceTerm],
) -> tuple[np.ndarray, list[float]]:
    """Composed prediction for a batch (n, volume) plus per-term temporal scales.

    The null forward pass is computed once and each distinct condition once,
    so the oracle runs exactly (#distinct conditions + 1) times. Terms are
    accumulated in a canonical order (sorted by condition id, then GSF
    content), which makes the sum independent of the caller's term order
    bit-for-bit. A term whose scale vector is identically zero contributes
    nothing, bit-exactly.
    """
    ab = schedule.alpha_bar(step)
    t = schedule.t_of(step)
    eps_null = models_mod.predict_noise(model, NULL_CONDITION, x, ab)
    ordered = sorted(terms, key=_term_sort_key)
    scales_by_cond: dict[str, np.ndarray] = {}
    for term in ordered:
        sv = term.gsf.scale_values(t, model.shape)
        if term.condition in scales_by_cond:
            scales_by_cond[term.condition] = scales_by_cond[term.condition] + sv
        else:
            scales_by_cond[term.condition] = sv
    out = eps_null.copy()
    for cond in sorted(scales_by_cond):
        eps_c = models_mod.predict_noise(model, cond, x, ab)
        scale = scales_by_cond[cond]
        if np.any(scale):
            out += scale * (eps_c - eps_null)
    temporal_scales = [term.gsf.temporal.value_at(t) for term in terms]
    return out, temporal_scales


def compose(
    model: ConditionModel,
    x_t: Field,
    step: int,
    schedule: NoiseSchedule,
    terms: list[GuidanceTerm],
) -> Field:
    """f_null + sum_i s_i(t, u, v) * g_i, evaluated per location."""
    if x_t.shape != model.shape:
        raise ShapeMismatchError(
            f"latent shape {x_t.shape.dims} != model shape {model.shape.dims}"
        )
    out, _ = compose_batch(model, x_t.values[None, :], step, schedule, terms)
    return Field(model.shape, out[0])


def cfg(
    model: ConditionModel,
    x_t: Field,
    step: int,
    schedule: NoiseSchedule,
    condition: str,
    s: float,
) -> Field:
    """Classifier-free guidance: f_null + s * (f_c - f_null)."""
    if condition == NULL_CONDITION:
        raise ValueError("cfg needs a non-null condition")
    ab = schedule.alpha_bar(step)
    x = x_t.values[None, :]
    eps_null = models_mod.predict_noise(model, NULL_CONDITION, x, ab)
    eps_c = models_mod.predict_noise(model, condition, x, ab)
    return Field(model.shape, (eps_null + float(s) * (eps_c - eps_null))[0])


def guidance_term(
    model: ConditionModel,
    x_t: Field,
    step: int,
    schedule: NoiseSchedule,
    condition: str,
) -> Field:
    """Directional pull toward a condition: f_c - f_null."""
    if condition == NULL_CONDITION:
        raise ValueError("guidance term needs a non-null condition")
    ab = schedule.alpha_bar(step)
    x = x_t.values[None, :]
    eps_c = models_mod.predict_noise(model, condition, x, ab)
    eps_null = models_mod.predict_noise(model, NULL_CONDITION, x, ab)
    return Field(model.shape, (eps_c - eps_null)[0])


def guidance_norm_map(g: Field) -> Field:
    """Per-location magnitude of a guidance field, normalized to [0, 1] by its max."""
    if not g.shape.is_grid:
        raise ShapeMismatchError("norm maps are defined for grid fields")
    mag = np.abs(g.values)
    peak = mag.max()
    if peak == 0.0:
        return Field.zeros(g.shape)
    return Field(g.shape, mag / peak)


# ---------------------------------------------------------------------------
# mask builders
# ---------------------------------------------------------------------------


def make_mask(shape: Shape, builder: dict) -> SpatialMask:
    """Construct a mask from a builder document.

    rect:        {"kind": "rect", "u0", "v0", "u1", "v1"} -- 1 inside the
                 half-open box [u0, u1) x [v0, v1), 0 outside
    radial:      {"kind": "radial", "cu", "cv", "r0", "r1"} -- 1 within r0 of
                 the center, linear to 0 at r1
    linear_fade: {"kind": "linear_fade", "axis": "u"|"v", "from", "to"} --
                 1 at `from`, linearly to 0 at `to`, clamped outside
    """
    if not shape.is_grid:
        raise ShapeMismatchError("masks require a grid shape")
    h, w = shape.dims
    kind = builder.get("kind")
    uu, vv = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    if kind == "rect":
        u0, v0, u1, v1 = (int(builder[k]) for k in ("u0", "v0", "u1", "v1"))
        if not (0 <= u0 < u1 <= h and 0 <= v0 < v1 <= w):
            raise ValueError(f"empty or out-of-grid rect ({u0},{v0},{u1},{v1}) on {h}x{w}")
        vals = ((uu >= u0) & (uu < u1) & (vv >= v0) & (vv < v1)).astype(np.float64)
    elif kind == "radial":
        cu, cv, r0, r1 = (float(builder[k]) for k in ("cu", "cv", "r0", "r1"))
        if not (0 <= cu <= h - 1 and 0 <= cv <= w - 1):
            raise ValueError(f"center ({cu},{cv}) outside {h}x{w} grid")
        if not 0.0 <= r0 < r1:
            raise ValueError(f"need 0 <= r0 < r1, got r0={r0}, r1={r1}")
        rho = np.sqrt((uu - cu) ** 2 + (vv - cv) ** 2)
        vals = np.clip((r1 - rho) / (r1 - r0), 0.0, 1.0)
        vals[rho <= r0] = 1.0
    elif kind == "linear_fade":
        axis = builder.get("axis")
        if axis not in ("u", "v"):
            raise ValueError(f"fade axis must be 'u' or 'v', got {axis!r}")
        start, stop = float(builder["from"]), float(builder["to"])
        limit = h - 1 if axis == "u" else w - 1
        if not (0 <= start <= limit and 0 <= stop <= limit):
            raise ValueError(f"fade endpoints must lie in [0, {limit}]")
        if start == stop:
            raise ValueError("fade endpoints must differ")
        coord = uu if axis == "u" else vv
        vals = np.clip((stop - coord) / (stop - start), 0.0, 1.0)
    else:
        raise ValueError(f"unknown mask builder kind {kind!r}")
    return SpatialMask.from_field(Field.from_grid(vals))
