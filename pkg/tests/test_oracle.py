import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guidewalk import (
    ConditionModel,
    Field,
    GaussianComponent,
    Shape,
    builtin_model,
    exact_epsilon,
    linear_beta_schedule,
    load_model,
    predict_noise,
)
from guidewalk.errors import DocumentError
from guidewalk.fields import band_energy
from guidewalk.models import NULL_CONDITION


def mixture_1d(mus, sigma, weights=None):
    shape = Shape.flat(1)
    weights = weights or [1.0] * len(mus)
    comps = tuple(
        GaussianComponent(Field(shape, [mu]), sigma**2, w) for mu, w in zip(mus, weights)
    )
    return ConditionModel(shape, {NULL_CONDITION: comps})


def test_pure_noise_limit_returns_input():
    model = mixture_1d([3.7], sigma=1.0)
    x = np.array([[2.5], [-1.0], [0.0]])
    out = predict_noise(model, NULL_CONDITION, x, alpha_bar=0.0)
    assert np.array_equal(out, x)


def test_centered_input_gives_zero():
    model = mixture_1d([1.5], sigma=0.7)
    sched = linear_beta_schedule(10, 1e-3, 0.2)
    ab = sched.alpha_bar(4)
    x_t = Field(Shape.flat(1), [np.sqrt(ab) * 1.5])
    eps = exact_epsilon(model, NULL_CONDITION, x_t, 4, sched)
    assert np.allclose(eps.values, 0.0, atol=1e-14)


def test_single_gaussian_closed_form():
    mu, sigma, ab = 0.8, 1.3, 0.37
    model = mixture_1d([mu], sigma=sigma)
    x = np.array([[2.0]])
    v = ab * sigma**2 + (1 - ab)
    expected = np.sqrt(1 - ab) * (2.0 - np.sqrt(ab) * mu) / v
    out = predict_noise(model, NULL_CONDITION, x, ab)
    assert out[0, 0] == pytest.approx(expected, rel=1e-14)


def test_mixture_symmetry_at_origin():
    model = mixture_1d([-2.0, 2.0], sigma=0.1)
    out = predict_noise(model, NULL_CONDITION, np.array([[0.0]]), alpha_bar=0.5)
    assert out[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_mixture_matches_monte_carlo_posterior():
    """Standing regression: rejection-sampled posterior mean vs closed form.

    Pairs (x0, eps) are simulated forward; conditioning on x_t near the
    target within a small window gives a model-free posterior estimate.
    """
    model = mixture_1d([-2.0, 2.0], sigma=0.1)
    ab = 0.5
    target, delta = 1.0, 0.02
    rng = np.random.default_rng(20240817)
    n = 600_000
    comp = rng.integers(0, 2, n)
    x0 = np.where(comp == 0, -2.0, 2.0) + 0.1 * rng.standard_normal(n)
    eps = rng.standard_normal(n)
    x_t = np.sqrt(ab) * x0 + np.sqrt(1 - ab) * eps
    sel = np.abs(x_t - target) < delta
    assert sel.sum() > 1000
    mc_mean = eps[sel].mean()
    mc_se = eps[sel].std(ddof=1) / np.sqrt(sel.sum())
    closed = predict_noise(model, NULL_CONDITION, np.array([[target]]), ab)[0, 0]
    assert abs(closed - mc_mean) < 3.0 * mc_se


@settings(max_examples=60, deadline=None)
@given(
    x=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    ab=st.floats(min_value=0.0, max_value=0.999999),
)
def test_no_nan_under_extreme_inputs(x, ab):
    model = mixture_1d([-2.0, 2.0, 7.5], sigma=0.05, weights=[0.2, 0.5, 0.3])
    out = predict_noise(model, NULL_CONDITION, np.array([[x]]), ab)
    assert np.isfinite(out).all()


def test_underflowed_component_contributes_zero():
    # responsibilities this far apart underflow to exactly zero weight
    model = mixture_1d([0.0, 1000.0], sigma=0.01)
    far = predict_noise(model, NULL_CONDITION, np.array([[0.0]]), alpha_bar=0.9)
    solo = mixture_1d([0.0], sigma=0.01)
    near = predict_noise(solo, NULL_CONDITION, np.array([[0.0]]), alpha_bar=0.9)
    assert far[0, 0] == near[0, 0]


def test_unknown_condition_and_shape_mismatch():
    model = builtin_model("two_styles_2d")
    sched = linear_beta_schedule(10, 1e-3, 0.2)
    with pytest.raises(KeyError):
        exact_epsilon(model, "nope", Field.zeros(Shape.flat(2)), 0, sched)
    from guidewalk.errors import ShapeMismatchError

    with pytest.raises(ShapeMismatchError):
        exact_epsilon(model, "base", Field.zeros(Shape.flat(3)), 0, sched)


# ---------------------------------------------------------------------------
# model documents
# ---------------------------------------------------------------------------


def minimal_doc():
    return {
        "shape": {"kind": "flat", "d": 2},
        "conditions": [
            {"id": "null", "components": [{"mean": [0.0, 0.0], "variance": 1.0, "weight": 1.0}]}
        ],
    }


def test_load_minimal_model():
    model = load_model(json.dumps(minimal_doc()))
    assert model.condition_ids == ["null"]


def test_weights_normalized():
    doc = minimal_doc()
    doc["conditions"][0]["components"] = [
        {"mean": [0.0, 0.0], "variance": 1.0, "weight": 2.0},
        {"mean": [1.0, 1.0], "variance": 1.0, "weight": 2.0},
    ]
    model = load_model(doc)
    weights = [c.weight for c in model.conditions["null"]]
    assert weights == [0.5, 0.5]


def test_missing_null_condition_named():
    doc = minimal_doc()
    doc["conditions"][0]["id"] = "base"
    with pytest.raises(DocumentError, match="missing null condition"):
        load_model(doc)


def test_nonpositive_variance_rejected():
    doc = minimal_doc()
    doc["conditions"][0]["components"][0]["variance"] = 0.0
    with pytest.raises(DocumentError):
        load_model(doc)


def test_shape_inconsistency_rejected():
    doc = minimal_doc()
    doc["conditions"][0]["components"][0]["mean"] = [0.0, 0.0, 0.0]
    with pytest.raises(DocumentError, match="mean"):
        load_model(doc)


def test_mean_file_reference(tmp_path):
    from guidewalk.gwf import write_field

    mean = Field(Shape.flat(2), [0.25, -0.5])
    write_field(mean, str(tmp_path / "mean.gwf"))
    doc = minimal_doc()
    doc["conditions"][0]["components"][0]["mean"] = {"file": "mean.gwf"}
    model = load_model(doc, base_dir=str(tmp_path))
    assert np.allclose(model.conditions["null"][0].mean.values, [0.25, -0.5])


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------


def test_two_styles_has_four_conditions():
    model = builtin_model("two_styles_2d")
    assert len(model.conditions) == 4
    assert NULL_CONDITION in model.conditions


def test_pattern_checkerboard_mean_is_high_band():
    model = builtin_model("pattern_16x16")
    checker = model.conditions["style"][0].mean
    assert band_energy(checker, "low", 8) < 1e-18
    # still an alternating-sign pattern in the interior
    grid = checker.grid_values
    signs = np.sign(grid[4:12, 4:12])
    u = np.arange(4, 12)
    assert np.array_equal(signs, (-1.0) ** (u[:, None] + u[None, :]))


def test_bands_style_means_are_high_band_and_layouts_low_band():
    model = builtin_model("bands_32x32")
    for cid in ("style", "style_A", "style_B"):
        mean = model.conditions[cid][0].mean
        assert band_energy(mean, "low", 8) < 1e-18
    base = model.conditions["base"][0].mean
    assert band_energy(base, "high", 8) < 1e-18
    null_comps = model.conditions[NULL_CONDITION]
    assert len(null_comps) == 2
    assert np.allclose(null_comps[0].mean.values, -null_comps[1].mean.values)


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin_model("mystery")


def test_external_denoiser_plugin_seam():
    """Objects exposing their own predict_noise stand in for the mixtures."""

    class TabulatedStub:
        shape = Shape.flat(2)
        conditions = {NULL_CONDITION: (), "c": ()}

        def require(self, condition):
            return self.conditions[condition]

        def predict_noise(self, condition, x, alpha_bar):
            return np.full_like(np.asarray(x, dtype=float), 0.25)

    from guidewalk import compose, GuidanceTerm, GSF, SpatialMask, TemporalProfile

    stub = TabulatedStub()
    sched = linear_beta_schedule(5, 1e-3, 0.2)
    out = predict_noise(stub, "c", np.zeros((3, 2)), 0.5)
    assert np.array_equal(out, np.full((3, 2), 0.25))
    term = GuidanceTerm("c", GSF(TemporalProfile.constant(2.0), SpatialMask.uniform()))
    composed = compose(stub, Field(Shape.flat(2), [0.0, 0.0]), 1, sched, [term])
    assert np.allclose(composed.values, 0.25)  # f_null + 2*(f_c - f_null), both 0.25
