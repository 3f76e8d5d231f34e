"""Closed-form noise predictors for Gaussian-mixture data distributions.

Each condition id selects a mixture of isotropic Gaussians over the field
space. For a component N(mu, sigma^2 I) the marginal of the noised variable
x_t = sqrt(ab)*x0 + sqrt(1-ab)*eps is N(sqrt(ab)*mu, v I) with
v = ab*sigma^2 + (1-ab), and the Bayes-optimal noise estimate is

    eps*(x) = sqrt(1-ab) * (x - sqrt(ab)*mu) / v.

For mixtures the estimate is the responsibility-weighted sum of per-component
estimates, with responsibilities proportional to weight * N(x; sqrt(ab)*mu_j,
v_j I), computed in log space with max subtraction. Components whose
log-responsibility falls below the float64 exp underflow (-745 relative to the
max) contribute exactly zero.

These predictors stand in for a trained network: they are exact, so every
guidance behavior downstream can be checked against closed forms.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DocumentError, ShapeMismatchError
from .fields import Field, Shape, band_limited
from .noise import DIAGNOSTICS, draw_noise_batch
from .schedule import NoiseSchedule

NULL_CONDITION = "null"

BUILTIN_NAMES = ("two_styles_2d", "pattern_16x16", "bands_32x32")

# bands_32x32 fixture constants. Patterns are DCT-band-limited fields built
# from the fixed diagnostics stream below; amplitudes are part of the frozen
# fixture definition (tests depend on them).
_BANDS_SEED = 2718
_BANDS_CUTOFF = 8
_BANDS_LAYOUT_RMS = 2.0
_BANDS_STYLE_RMS = 2.0
_BANDS_SIGMA_A = 0.25
_BANDS_SIGMA_B = 1.0


@dataclass(frozen=True)
class GaussianComponent:
    mean: Field
    variance: float
    weight: float

    def __post_init__(self):
        if not (self.variance > 0.0 and math.isfinite(self.variance)):
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not (self.weight > 0.0 and math.isfinite(self.weight)):
            raise ValueError(f"weight must be positive, got {self.weight}")


@dataclass(frozen=True, eq=False)
class ConditionModel:
    """Registry of condition id -> mixture; must contain the null condition."""

    shape: Shape
    conditions: Mapping[str, tuple[GaussianComponent, ...]]
    name: str = ""

    def __post_init__(self):
        conds = {}
        for cid, comps in self.conditions.items():
            comps = tuple(comps)
            if not comps:
                raise ValueError(f"condition {cid!r} has no components")
            for comp in comps:
                if comp.mean.shape != self.shape:
                    raise ShapeMismatchError(
                        f"condition {cid!r}: component mean shape {comp.mean.shape.dims} "
                        f"!= model shape {self.shape.dims}"
                    )
            total = sum(c.weight for c in comps)
            conds[cid] = tuple(
                GaussianComponent(c.mean, c.variance, c.weight / total) for c in comps
            )
        if NULL_CONDITION not in conds:
            raise ValueError("missing null condition")
        object.__setattr__(self, "conditions", conds)

    @property
    def condition_ids(self) -> list[str]:
        return sorted(self.conditions)

    def require(self, condition: str) -> tuple[GaussianComponent, ...]:
        try:
            return self.conditions[condition]
        except KeyError:
            raise KeyError(f"unknown condition {condition!r}") from None

    def with_condition(self, condition: str, comps) -> "ConditionModel":
        """A copy of the model with one extra (or replaced) condition."""
        merged = dict(self.conditions)
        merged[condition] = tuple(comps)
        return ConditionModel(self.shape, merged, self.name)


def predict_noise(
    model: ConditionModel, condition: str, x: np.ndarray, alpha_bar: float
) -> np.ndarray:
    """Batched optimal noise estimate; x has shape (n, volume).

    Single entry point for every forward pass in the package, so call counts
    and substitutions are observable in one place. A model object exposing its
    own ``predict_noise(condition, x, alpha_bar)`` (e.g. a tabulated external
    denoiser) is dispatched to directly; none ship with the package.
    """
    own = getattr(model, "predict_noise", None)
    if own is not None:
        out = np.asarray(own(condition, x, alpha_bar), dtype=np.float64)
        if out.shape != np.asarray(x).shape:
            raise ShapeMismatchError(
                f"external denoiser returned shape {out.shape} for input {np.asarray(x).shape}"
            )
        return out
    comps = model.require(condition)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.shape.volume:
        raise ShapeMismatchError(
            f"latent batch shape {x.shape} incompatible with volume {model.shape.volume}"
        )
    ab = float(alpha_bar)
    if not 0.0 <= ab <= 1.0:
        raise ValueError(f"alpha_bar must be in [0, 1], got {ab}")
    sqrt_ab = math.sqrt(ab)
    sqrt_1m = math.sqrt(1.0 - ab)

    if len(comps) == 1:
        comp = comps[0]
        v = ab * comp.variance + (1.0 - ab)
        return sqrt_1m * (x - sqrt_ab * comp.mean.values) / v

    d = model.shape.volume
    log_r = np.empty((len(comps), x.shape[0]))
    eps_parts = np.empty((len(comps),) + x.shape)
    for k, comp in enumerate(comps):
        v = ab * comp.variance + (1.0 - ab)
        centered = x - sqrt_ab * comp.mean.values
        sq = np.einsum("nd,nd->n", centered, centered)
        log_r[k] = math.log(comp.weight) - 0.5 * (d * math.log(2.0 * math.pi * v) + sq / v)
        eps_parts[k] = sqrt_1m * centered / v
    log_r -= log_r.max(axis=0, keepdims=True)
    resp = np.exp(log_r)
    resp /= resp.sum(axis=0, keepdims=True)
    return np.einsum("kn,knd->nd", resp, eps_parts)


def exact_epsilon(
    model: ConditionModel,
    condition: str,
    x_t: Field,
    step: int,
    schedule: NoiseSchedule,
) -> Field:
    """Optimal noise estimate E[eps | x_t, condition] at a sampling step."""
    if x_t.shape != model.shape:
        raise ShapeMismatchError(
            f"latent shape {x_t.shape.dims} != model shape {model.shape.dims}"
        )
    out = predict_noise(model, condition, x_t.values[None, :], schedule.alpha_bar(step))
    return Field(model.shape, out[0])


def sample_direct(
    model: ConditionModel, condition: str, n: int, seed: int
) -> list[Field]:
    """Direct draws from a condition's mixture (diagnostics noise stream)."""
    comps = model.require(condition)
    vol = model.shape.volume
    noise = draw_noise_batch(seed, 0, DIAGNOSTICS, n, model.shape)
    # component choices from a second diagnostics step, via uniforms
    u = draw_noise_batch(seed, 1, DIAGNOSTICS, 1, Shape.flat(n))[0]
    from scipy.stats import norm

    picks = np.searchsorted(
        np.cumsum([c.weight for c in comps]), norm.cdf(u), side="right"
    )
    picks = np.minimum(picks, len(comps) - 1)
    out = []
    for i in range(n):
        comp = comps[picks[i]]
        vals = comp.mean.values + math.sqrt(comp.variance) * noise[i]
        out.append(Field(model.shape, vals))
    return out


# ---------------------------------------------------------------------------
# model documents
# ---------------------------------------------------------------------------


def _parse_shape(doc, path: str) -> Shape:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DocumentError("shape must be an object with a 'kind'", path)
    kind = doc["kind"]
    try:
        if kind == "grid":
            return Shape.grid(int(doc["h"]), int(doc["w"]))
        if kind == "flat":
            return Shape.flat(int(doc["d"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"bad {kind} shape: {exc}", path) from None
    raise DocumentError(f"unknown shape kind {kind!r}", path)


def _parse_mean(doc, shape: Shape, base_dir: str, path: str) -> Field:
    if isinstance(doc, dict) and "file" in doc:
        from .gwf import read_field

        fpath = doc["file"]
        if base_dir and not os.path.isabs(fpath):
            fpath = os.path.join(base_dir, fpath)
        try:
            mean = read_field(fpath)
        except OSError as exc:
            raise DocumentError(f"cannot read mean file: {exc}", path) from None
        if mean.shape != shape:
            raise DocumentError(
                f"mean file shape {mean.shape.dims} != model shape {shape.dims}", path
            )
        return mean
    if isinstance(doc, (int, float)):
        return Field.full(shape, float(doc))
    try:
        arr = np.asarray(doc, dtype=np.float64)
    except (TypeError, ValueError):
        raise DocumentError("mean must be a number, array, or {'file': ...}", path) from None
    if arr.ndim == 2 and shape.is_grid and arr.shape == shape.dims:
        return Field(shape, arr.reshape(-1))
    if arr.ndim == 1 and arr.size == shape.volume:
        return Field(shape, arr)
    raise DocumentError(
        f"mean has shape {arr.shape}, model shape is {shape.dims}", path
    )


def load_model(document, base_dir: str = "") -> ConditionModel:
    """Build a ConditionModel from a JSON text or parsed document.

    Raises DocumentError with a document path for every schema violation,
    including the dedicated "missing null condition" case.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"invalid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise DocumentError("model document must be an object")
    shape = _parse_shape(document.get("shape"), "shape")
    conds_doc = document.get("conditions")
    if not isinstance(conds_doc, list) or not conds_doc:
        raise DocumentError("conditions must be a non-empty list", "conditions")
    conditions: dict[str, list[GaussianComponent]] = {}
    for ci, cdoc in enumerate(conds_doc):
        cpath = f"conditions[{ci}]"
        if not isinstance(cdoc, dict) or not isinstance(cdoc.get("id"), str):
            raise DocumentError("condition needs a string 'id'", cpath)
        cid = cdoc["id"]
        if cid in conditions:
            raise DocumentError(f"duplicate condition id {cid!r}", cpath)
        comps_doc = cdoc.get("components")
        if not isinstance(comps_doc, list) or not comps_doc:
            raise DocumentError("components must be a non-empty list", f"{cpath}.components")
        comps = []
        for ki, kdoc in enumerate(comps_doc):
            kpath = f"{cpath}.components[{ki}]"
            if not isinstance(kdoc, dict):
                raise DocumentError("component must be an object", kpath)
            mean = _parse_mean(kdoc.get("mean"), shape, base_dir, f"{kpath}.mean")
            try:
                variance = float(kdoc.get("variance", 1.0))
                weight = float(kdoc.get("weight", 1.0))
                comps.append(GaussianComponent(mean, variance, weight))
            except (TypeError, ValueError) as exc:
                raise DocumentError(str(exc), kpath) from None
        conditions[cid] = comps
    if NULL_CONDITION not in conditions:
        raise DocumentError(
            f"missing null condition (no condition with id {NULL_CONDITION!r})",
            "conditions",
        )
    try:
        return ConditionModel(shape, conditions, str(document.get("name", "")))
    except (ValueError, ShapeMismatchError) as exc:
        raise DocumentError(str(exc), "conditions") from None


def load_model_file(path: str) -> ConditionModel:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    model = load_model(text, base_dir=os.path.dirname(os.path.abspath(path)))
    if not model.name:
        model = ConditionModel(
            model.shape, model.conditions, os.path.splitext(os.path.basename(path))[0]
        )
    return model


# ---------------------------------------------------------------------------
# builtin fixture models
# ---------------------------------------------------------------------------


def _seeded_pattern(h: int, w: int, seed: int, lane: int) -> np.ndarray:
    return draw_noise_batch(seed, 0, DIAGNOSTICS, lane + 1, Shape.grid(h, w))[-1].reshape(h, w)


def _band_pattern(
    h: int, w: int, cutoff: int, band: str, seed: int, lane: int, rms: float
) -> Field:
    """Deterministic band-limited pattern with the requested RMS and zero mean."""
    raw = band_limited(_seeded_pattern(h, w, seed, lane), cutoff, band)
    if band == "low":
        raw = raw - raw.mean()  # only moves the DC coefficient; stays low-band
    scale = rms / math.sqrt(float((raw**2).mean()))
    return Field.from_grid(raw * scale)


def _checkerboard_highband(h: int, w: int, cutoff: int) -> Field:
    u = np.arange(h)[:, None]
    v = np.arange(w)[None, :]
    board = (-1.0) ** (u + v)
    proj = band_limited(board, cutoff, "high")
    proj /= math.sqrt(float((proj**2).mean()))
    return Field.from_grid(proj)


def _gradient(h: int, w: int) -> Field:
    cols = np.linspace(-1.0, 1.0, w)
    return Field.from_grid(np.tile(cols, (h, 1)))


def _two_styles_2d() -> ConditionModel:
    shape = Shape.flat(2)

    def gauss(mean, var=1.0):
        return (GaussianComponent(Field(shape, np.array(mean)), var, 1.0),)

    return ConditionModel(
        shape,
        {
            NULL_CONDITION: gauss([0.0, 0.0], var=4.0),  # broad prior at the origin
            "base": gauss([2.0, 0.0]),
            "style_A": gauss([0.0, 2.0]),
            "style_B": gauss([0.0, -2.0]),
        },
        name="two_styles_2d",
    )


def _pattern_16x16() -> ConditionModel:
    shape = Shape.grid(16, 16)
    flat_gray = Field.zeros(shape)
    gradient = _gradient(16, 16)
    checker = _checkerboard_highband(16, 16, 8)
    return ConditionModel(
        shape,
        {
            NULL_CONDITION: (GaussianComponent(flat_gray, 1.0, 1.0),),
            "base": (GaussianComponent(gradient, 1.0, 1.0),),
            "style": (GaussianComponent(checker, 1.0, 1.0),),
        },
        name="pattern_16x16",
    )


def _bands_32x32() -> ConditionModel:
    shape = Shape.grid(32, 32)
    layout = _band_pattern(32, 32, _BANDS_CUTOFF, "low", _BANDS_SEED, 0, _BANDS_LAYOUT_RMS)
    style = _band_pattern(32, 32, _BANDS_CUTOFF, "high", _BANDS_SEED, 1, _BANDS_STYLE_RMS)
    style_ab = _band_pattern(32, 32, _BANDS_CUTOFF, "high", _BANDS_SEED, 2, _BANDS_STYLE_RMS)
    neg_layout = Field(shape, -layout.values)
    neg_style_ab = Field(shape, -style_ab.values)
    return ConditionModel(
        shape,
        {
            # bimodal layout prior: two opposite low-band prototypes
            NULL_CONDITION: (
                GaussianComponent(layout, 1.0, 0.5),
                GaussianComponent(neg_layout, 1.0, 0.5),
            ),
            "base": (GaussianComponent(layout, 1.0, 1.0),),
            "style": (GaussianComponent(style, 1.0, 1.0),),
            # antipodal pair with asymmetric sharpness, for interpolation studies
            "style_A": (GaussianComponent(style_ab, _BANDS_SIGMA_A**2, 1.0),),
            "style_B": (GaussianComponent(neg_style_ab, _BANDS_SIGMA_B**2, 1.0),),
            # style- and layout-free reference point; guiding against it
            # amplifies whichever layout the trajectory is committing to
            "gray": (GaussianComponent(Field.zeros(shape), 1.0, 1.0),),
        },
        name="bands_32x32",
    )


_BUILTIN_FACTORIES = {
    "two_styles_2d": _two_styles_2d,
    "pattern_16x16": _pattern_16x16,
    "bands_32x32": _bands_32x32,
}
_builtin_cache: dict[str, ConditionModel] = {}


def builtin_model(name: str) -> ConditionModel:
    if name not in _BUILTIN_FACTORIES:
        raise KeyError(f"unknown builtin model {name!r} (have {sorted(_BUILTIN_FACTORIES)})")
    if name not in _builtin_cache:
        _builtin_cache[name] = _BUILTIN_FACTORIES[name]()
    return _builtin_cache[name]
