"""Walk planning: parameter sweeps, style interpolation, and the
condition-blending baseline.

A walk turns one base run spec into a family of specs that differ only in the
swept guidance parameters and (by default) share their seed, so cells are
directly comparable frame by frame.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DocumentError
from .guidance import PIECEWISE, RAMP_UP, TemporalProfile, make_mask  # noqa: F401 (re-export)
from .models import ConditionModel, GaussianComponent
from .fields import Field
from .runspec import MASK_UNIFORM, RunSpec, TermSpec

MAGNITUDE = "magnitude"
ONSET = "onset"
MASK_OPACITY = "mask_opacity"

_PARAMETERS = (MAGNITUDE, ONSET, MASK_OPACITY)


@dataclass(frozen=True)
class WalkAxis:
    term: int
    parameter: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.parameter not in _PARAMETERS:
            raise ValueError(f"unknown walk parameter {self.parameter!r}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("axis needs at least one value")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class WalkSpec:
    base: RunSpec
    axes: tuple[WalkAxis, ...]
    shared_seed: bool = True

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise ValueError("a walk takes 1 or 2 axes")
        if len(self.axes) == 2 and (
            self.axes[0].term == self.axes[1].term
            and self.axes[0].parameter == self.axes[1].parameter
        ):
            raise ValueError("axes must reference distinct terms or parameters")


def _scaled_profile(profile: TemporalProfile, factor: float) -> TemporalProfile:
    if profile.kind == PIECEWISE:
        return TemporalProfile.piecewise([(t, s * factor) for t, s in profile.knots])
    return profile.with_magnitude(profile.m * factor)


def _apply_axis(term: TermSpec, parameter: str, value: float) -> TermSpec:
    if parameter == MAGNITUDE:
        return TermSpec(term.condition, term.temporal.with_magnitude(value), term.mask)
    if parameter == ONSET:
        if term.temporal.kind != RAMP_UP:
            raise ValueError("onset applies to ramp_up profiles only")
        return TermSpec(
            term.condition, TemporalProfile.ramp_up(term.temporal.m, value), term.mask
        )
    # mask opacity: s(t) * (o * mask) == (o * s)(t) * mask, so sweep the
    # temporal amplitude; the mask reference itself stays put.
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"mask opacity must be in [0, 1], got {value}")
    return TermSpec(term.condition, _scaled_profile(term.temporal, value), term.mask)


def plan_walk(spec: WalkSpec) -> list[RunSpec]:
    """Cartesian product over the axes, row-major in axis order."""
    base = spec.base
    for axis in spec.axes:
        if not 0 <= axis.term < len(base.terms):
            raise DocumentError(
                f"axis references term {axis.term}, run has {len(base.terms)} terms",
                "axes",
            )
    grids = [[(axis, v) for v in axis.values] for axis in spec.axes]
    cells: list[RunSpec] = []

    def emit(assignments):
        terms = list(base.terms)
        for axis, value in assignments:
            terms[axis.term] = _apply_axis(terms[axis.term], axis.parameter, value)
        cells.append(base.with_terms(terms))

    if len(grids) == 1:
        for a in grids[0]:
            emit([a])
    else:
        for a in grids[0]:
            for b in grids[1]:
                emit([a, b])
    if not spec.shared_seed:
        cells = [cell.with_seed(base.sampler.seed + i) for i, cell in enumerate(cells)]
    return cells


def interpolate_styles(
    base: RunSpec,
    condition_a: str,
    condition_b: str,
    m: float,
    lambdas,
    temporal: TemporalProfile | None = None,
    mask=MASK_UNIFORM,
) -> list[RunSpec]:
    """One run per lambda, splitting magnitude m between the two styles.

    At lambda the A term has magnitude m*(1-lambda) and the B term m*lambda,
    with identical temporal kind and mask, on top of the unchanged base terms.
    Endpoints reduce to the single-style runs exactly (zero-scale terms are
    transparent and the seed is shared).
    """
    if condition_a == condition_b:
        raise ValueError("interpolation needs two distinct conditions")
    template = temporal if temporal is not None else TemporalProfile.constant(0.0)
    if template.kind == PIECEWISE:
        raise ValueError("piecewise profiles have no magnitude to split")
    out = []
    for lam in lambdas:
        lam = float(lam)
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {lam}")
        term_a = TermSpec(condition_a, template.with_magnitude(m * (1.0 - lam)), mask)
        term_b = TermSpec(condition_b, template.with_magnitude(m * lam), mask)
        out.append(base.with_terms(tuple(base.terms) + (term_a, term_b)))
    return out


def blend_conditions_baseline(
    model: ConditionModel, condition_a: str, condition_b: str, lam: float
) -> tuple[ConditionModel, str]:
    """Blend the *conditions* instead of the guidance (baseline).

    Registers a Gaussian with mean (1-lam)*mu_A + lam*mu_B and the
    lambda-weighted variance under a derived id, returning the extended model
    and the id. Only defined for single-Gaussian conditions; mixtures are
    reported as errors rather than silently degraded.
    """
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    comps_a = model.require(condition_a)
    comps_b = model.require(condition_b)
    if len(comps_a) != 1 or len(comps_b) != 1:
        raise ValueError(
            "condition blending is undefined for mixture conditions "
            f"({condition_a}: {len(comps_a)} components, {condition_b}: {len(comps_b)})"
        )
    (a,), (b,) = comps_a, comps_b
    mean = Field(model.shape, (1.0 - lam) * a.mean.values + lam * b.mean.values)
    variance = (1.0 - lam) * a.variance + lam * b.variance
    blend_id = f"blend_{condition_a}_{condition_b}_{lam:g}"
    blended = model.with_condition(blend_id, (GaussianComponent(mean, variance, 1.0),))
    return blended, blend_id
