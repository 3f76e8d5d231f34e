"""Quantitative verification metrics and figure-style summaries."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ShapeMismatchError
from .fields import Field, dct2, require_same_shape
from .guidance import guidance_norm_map
from .noise import DIAGNOSTICS, draw_noise_batch
from .sampler import Trajectory


@dataclass(frozen=True)
class MetricReport:
    """One named measurement; informational metrics carry no tolerance."""

    name: str
    value: float
    tolerance: float | None
    passed: bool
    metadata: dict = dataclass_field(default_factory=dict)

    @classmethod
    def error_metric(cls, name: str, value: float, tolerance: float, **metadata):
        return cls(name, float(value), float(tolerance), bool(value <= tolerance), metadata)

    @classmethod
    def info_metric(cls, name: str, value: float, **metadata):
        return cls(name, float(value), None, True, metadata)

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "metadata": dict(sorted(self.metadata.items())),
        }


def reports_to_json(reports: list[MetricReport]) -> str:
    return json.dumps([r.to_document() for r in reports], indent=2, sort_keys=True) + "\n"


def _stack(samples: list[Field]) -> np.ndarray:
    if not samples:
        raise ValueError("need at least one sample")
    require_same_shape(*samples)
    return np.stack([s.values for s in samples])


def _cross_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Euclidean distances via the Gram expansion; clamped for fp safety.
    d2 = (
        (a * a).sum(1)[:, None]
        + (b * b).sum(1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def energy_distance(samples_a: list[Field], samples_b: list[Field]) -> float:
    """Two-sample energy distance 2 E|a-b| - E|a-a'| - E|b-b'| (V-statistic)."""
    a = _stack(samples_a)
    b = _stack(samples_b)
    if a.shape[1] != b.shape[1]:
        raise ShapeMismatchError("sample sets live in different spaces")
    return float(
        2.0 * _cross_distances(a, b).mean()
        - _cross_distances(a, a).mean()
        - _cross_distances(b, b).mean()
    )


def energy_distance_permutation_test(
    samples_a: list[Field],
    samples_b: list[Field],
    n_permutations: int = 199,
    seed: int = 0,
) -> tuple[float, float]:
    """Observed energy distance and permutation p-value for equality.

    Permutations are drawn from the diagnostics noise stream, so the test is
    reproducible. The statistic is recomputed from the pooled distance matrix
    using only two sub-block sums per permutation.
    """
    a = _stack(samples_a)
    b = _stack(samples_b)
    n_a, n_b = len(a), len(b)
    pooled = np.concatenate([a, b], axis=0)
    dist = _cross_distances(pooled, pooled)
    total = dist.sum()

    def stat(idx_a: np.ndarray, idx_b: np.ndarray) -> float:
        s_aa = dist[np.ix_(idx_a, idx_a)].sum()
        s_bb = dist[np.ix_(idx_b, idx_b)].sum()
        s_ab = (total - s_aa - s_bb) / 2.0
        return float(
            2.0 * s_ab / (len(idx_a) * len(idx_b))
            - s_aa / len(idx_a) ** 2
            - s_bb / len(idx_b) ** 2
        )

    observed = stat(np.arange(n_a), np.arange(n_a, n_a + n_b))
    count = 0
    for p in range(n_permutations):
        # ranking a fresh keyed normal vector yields a uniform permutation
        z = draw_noise_batch(seed, p, DIAGNOSTICS, 1, _flat_shape(n_a + n_b))[0]
        order = np.argsort(z, kind="stable")
        if stat(order[:n_a], order[n_a:]) >= observed:
            count += 1
    pvalue = (1.0 + count) / (1.0 + n_permutations)
    return observed, pvalue


def _flat_shape(n: int):
    from .fields import Shape

    return Shape.flat(n)


def effective_mean(model, terms) -> Field:
    """Per-location effective mean mu_null + sum_i s_i(u,v) * (mu_i - mu_null).

    The closed-form target of composed guidance when every involved condition
    is a single Gaussian with one shared variance and every term has a
    constant temporal profile. Raises ValueError outside that regime.
    """
    from .guidance import CONSTANT
    from .models import NULL_CONDITION

    comps_null = model.require(NULL_CONDITION)
    involved = [comps_null]
    for term in terms:
        if term.gsf.temporal.kind != CONSTANT:
            raise ValueError("effective mean needs constant temporal profiles")
        involved.append(model.require(term.condition))
    variances = set()
    for comps in involved:
        if len(comps) != 1:
            raise ValueError("effective mean needs single-Gaussian conditions")
        variances.add(comps[0].variance)
    if len(variances) != 1:
        raise ValueError("effective mean needs one shared variance")
    mu = comps_null[0].mean.values.copy()
    for term in terms:
        s = term.gsf.scale_values(0.0, model.shape)
        mu += s * (model.require(term.condition)[0].mean.values - comps_null[0].mean.values)
    return Field(model.shape, mu)


def mean_field_error(samples: list[Field], target_mean: Field) -> float:
    """Max over locations of |sample mean - target|."""
    stacked = _stack(samples)
    if stacked.shape[1] != target_mean.shape.volume:
        raise ShapeMismatchError("target mean shape differs from samples")
    return float(np.abs(stacked.mean(axis=0) - target_mean.values).max())


def norm_map_series(trajectory: Trajectory) -> list[tuple[float, Field]]:
    """Normalized magnitude map of the composed prediction at each recorded step."""
    if not trajectory.steps:
        raise ValueError("trajectory has no recorded steps")
    return [(s.t, guidance_norm_map(s.eps_hat)) for s in trajectory.steps]


def low_band_share(f: Field, cutoff: int) -> float:
    """Fraction of a grid field's energy inside the low DCT band (0 if empty)."""
    from .fields import band_energy

    low = band_energy(f, "low", cutoff)
    high = band_energy(f, "high", cutoff)
    total = low + high
    return float(low / total) if total > 0.0 else 0.0


def layout_preservation(sample_base: Field, sample_styled: Field, cutoff: int) -> float:
    """Relative low-band DCT error between a base sample and a styled one.

    Zero means the coarse layout is untouched; the measure ignores any
    perturbation supported entirely on the high band.
    """
    require_same_shape(sample_base, sample_styled)
    if not sample_base.shape.is_grid:
        raise ShapeMismatchError("layout preservation requires grid fields")
    h, w = sample_base.shape.dims
    if not 1 <= cutoff < min(h, w):
        raise ValueError(f"cutoff must be in [1, {min(h, w) - 1}], got {cutoff}")
    ca = dct2(sample_base)
    cb = dct2(sample_styled)
    i, j = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    low = np.maximum(i, j) < cutoff
    ref = float((ca[low] ** 2).sum())
    if ref == 0.0:
        raise ValueError("base sample has no low-band content to compare against")
    diff = float(((ca[low] - cb[low]) ** 2).sum())
    return float(np.sqrt(diff) / np.sqrt(ref))
