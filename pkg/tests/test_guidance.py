import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import guidewalk.models as models_mod
from guidewalk import (
    GSF,
    Field,
    GuidanceTerm,
    Shape,
    SpatialMask,
    TemporalProfile,
    builtin_model,
    cfg,
    compose,
    eval_gsf,
    exact_epsilon,
    guidance_norm_map,
    guidance_term,
    linear_beta_schedule,
)
from guidewalk.errors import ShapeMismatchError
from guidewalk.models import NULL_CONDITION
from tests.conftest import equal_sigma_model


def uniform_gsf(profile):
    return GSF(profile, SpatialMask.uniform())


# ---------------------------------------------------------------------------
# temporal profiles
# ---------------------------------------------------------------------------


def test_ramp_up_values():
    gsf = uniform_gsf(TemporalProfile.ramp_up(2.0, 1.0))
    assert eval_gsf(gsf, 0.5) == pytest.approx(1.0)
    assert eval_gsf(gsf, 0.0) == pytest.approx(2.0)
    late = uniform_gsf(TemporalProfile.ramp_up(2.0, 0.6))
    assert eval_gsf(late, 0.8) == 0.0
    assert eval_gsf(late, 0.6) == 0.0
    assert eval_gsf(late, 0.0) == pytest.approx(2.0)


def test_early_start_literal_formula():
    # onset above one: nonzero everywhere, m at t=0, m*(a-1)/a at t=1
    gsf = uniform_gsf(TemporalProfile.ramp_up(2.0, 1.4))
    assert eval_gsf(gsf, 1.0) == pytest.approx(2.0 / 1.4 * 0.4)
    assert eval_gsf(gsf, 0.0) == pytest.approx(2.0)


def test_ramp_down_and_constant():
    down = uniform_gsf(TemporalProfile.ramp_down(3.0))
    assert eval_gsf(down, 1.0) == 3.0
    assert eval_gsf(down, 0.0) == 0.0
    const = uniform_gsf(TemporalProfile.constant(7.5))
    assert eval_gsf(const, 0.123) == 7.5


def test_piecewise_interpolation_and_clamping():
    prof = TemporalProfile.piecewise([(0.8, 4.0), (0.2, 1.0)])
    gsf = uniform_gsf(prof)
    assert eval_gsf(gsf, 0.8) == pytest.approx(4.0)
    assert eval_gsf(gsf, 0.5) == pytest.approx(2.5)
    assert eval_gsf(gsf, 1.0) == pytest.approx(4.0)  # clamped above
    assert eval_gsf(gsf, 0.0) == pytest.approx(1.0)  # clamped below


def test_profile_validation():
    with pytest.raises(ValueError):
        TemporalProfile.ramp_up(1.0, 0.0)
    with pytest.raises(ValueError):
        TemporalProfile.constant(float("inf"))
    with pytest.raises(ValueError):
        TemporalProfile.piecewise([(0.2, 1.0), (0.8, 2.0)])  # increasing t
    with pytest.raises(ValueError):
        TemporalProfile.piecewise([])


def test_masked_gsf_needs_location():
    mask = SpatialMask.from_field(Field.from_grid(np.eye(4)))
    gsf = GSF(TemporalProfile.constant(2.0), mask)
    with pytest.raises(ValueError):
        eval_gsf(gsf, 0.5)
    assert eval_gsf(gsf, 0.5, (1, 1)) == 2.0
    assert eval_gsf(gsf, 0.5, (1, 2)) == 0.0
    with pytest.raises(ValueError):
        eval_gsf(gsf, 0.5, (4, 0))


def test_mask_values_clamped():
    raw = Field.from_grid([[2.0, -1.0], [0.5, 1.0]])
    mask = SpatialMask.from_field(raw)
    assert mask.field.values.min() >= 0.0
    assert mask.field.values.max() <= 1.0


def test_null_condition_cannot_be_a_term():
    with pytest.raises(ValueError):
        GuidanceTerm(NULL_CONDITION, uniform_gsf(TemporalProfile.constant(1.0)))


# ---------------------------------------------------------------------------
# guidance terms and composition
# ---------------------------------------------------------------------------


@pytest.fixture
def sched():
    return linear_beta_schedule(12, 1e-3, 0.2)


def test_identical_condition_gives_zero_term(sched):
    model = equal_sigma_model({NULL_CONDITION: [1.0, -1.0], "same": [1.0, -1.0]})
    x = Field(Shape.flat(2), [0.3, 0.7])
    g = guidance_term(model, x, 3, sched, "same")
    assert np.array_equal(g.values, [0.0, 0.0])


def test_guidance_term_constant_in_x_for_equal_sigma(sched):
    # subtracting the two affine closed forms leaves
    # sqrt(1-ab)*sqrt(ab)*(mu_null - mu_c)/v, independent of x_t
    model = equal_sigma_model({NULL_CONDITION: [0.0, 0.0], "c": [2.0, -1.0]})
    step = 4
    ab = sched.alpha_bar(step)
    v = ab * 1.0 + (1 - ab)
    expected = np.sqrt(1 - ab) * np.sqrt(ab) * (np.array([0.0, 0.0]) - [2.0, -1.0]) / v
    for xv in ([0.0, 0.0], [5.0, -3.0], [1e6, -1e6]):
        g = guidance_term(model, Field(Shape.flat(2), xv), step, sched, "c")
        assert np.allclose(g.values, expected, rtol=1e-12)
        assert np.all(np.isfinite(g.values))


def test_compose_empty_terms_is_null_pass(sched, flat2_model):
    x = Field(Shape.flat(2), [0.4, -0.2])
    out = compose(flat2_model, x, 2, sched, [])
    null = exact_epsilon(flat2_model, NULL_CONDITION, x, 2, sched)
    assert np.array_equal(out.values, null.values)


def test_single_constant_term_equals_cfg_bit_exact(sched, flat2_model):
    x = Field(Shape.flat(2), [0.9, 1.4])
    for s in (-0.5, 0.0, 1.0, 7.5):
        term = GuidanceTerm("c1", uniform_gsf(TemporalProfile.constant(s)))
        via_compose = compose(flat2_model, x, 5, sched, [term])
        via_cfg = cfg(flat2_model, x, 5, sched, "c1", s)
        assert np.array_equal(via_compose.values, via_cfg.values)


def test_cfg_endpoints(sched, flat2_model):
    x = Field(Shape.flat(2), [0.9, 1.4])
    null = exact_epsilon(flat2_model, NULL_CONDITION, x, 5, sched)
    c1 = exact_epsilon(flat2_model, "c1", x, 5, sched)
    assert np.array_equal(cfg(flat2_model, x, 5, sched, "c1", 0.0).values, null.values)
    s1 = cfg(flat2_model, x, 5, sched, "c1", 1.0)
    assert np.allclose(s1.values, c1.values, rtol=1e-12, atol=1e-14)


def test_master_oracle_two_terms(sched):
    # constant-scale composition over equal-sigma Gaussians targets the
    # single Gaussian at mu_eff = mu_null + sum s_i (mu_i - mu_null)
    model = equal_sigma_model(
        {NULL_CONDITION: [0.5, -0.5], "a": [2.0, 1.0], "b": [-1.0, 3.0]}
    )
    s1, s2 = 0.7, -0.3
    mu_eff = (
        np.array([0.5, -0.5])
        + s1 * (np.array([2.0, 1.0]) - [0.5, -0.5])
        + s2 * (np.array([-1.0, 3.0]) - [0.5, -0.5])
    )
    eff_model = equal_sigma_model({NULL_CONDITION: list(mu_eff)})
    terms = [
        GuidanceTerm("a", uniform_gsf(TemporalProfile.constant(s1))),
        GuidanceTerm("b", uniform_gsf(TemporalProfile.constant(s2))),
    ]
    for step in range(sched.num_steps):
        for xv in ([0.0, 0.0], [1.3, -2.2], [10.0, 4.0]):
            x = Field(Shape.flat(2), xv)
            composed = compose(model, x, step, sched, terms)
            target = exact_epsilon(eff_model, NULL_CONDITION, x, step, sched)
            assert np.allclose(composed.values, target.values, atol=1e-9, rtol=0)


@settings(max_examples=25, deadline=None)
@given(perm=st.permutations(range(4)))
def test_term_order_invariance_bit_exact(perm):
    sched = linear_beta_schedule(8, 1e-3, 0.2)
    model = equal_sigma_model(
        {NULL_CONDITION: [0.0, 0.0], "a": [1.0, 0.0], "b": [0.0, 1.0], "c": [1.0, 1.0]}
    )
    terms = [
        GuidanceTerm("a", uniform_gsf(TemporalProfile.constant(0.3))),
        GuidanceTerm("b", uniform_gsf(TemporalProfile.ramp_down(1.1))),
        GuidanceTerm("c", uniform_gsf(TemporalProfile.ramp_up(0.9, 0.8))),
        GuidanceTerm("a", uniform_gsf(TemporalProfile.constant(-0.2))),
    ]
    x = Field(Shape.flat(2), [0.25, -1.5])
    base = compose(model, x, 3, sched, terms)
    shuffled = compose(model, x, 3, sched, [terms[i] for i in perm])
    assert np.array_equal(base.values, shuffled.values)


def test_linearity_of_duplicate_terms(sched, flat2_model):
    x = Field(Shape.flat(2), [0.1, 0.2])
    s1, s2 = 0.6, 1.7
    combined = compose(
        flat2_model, x, 4, sched,
        [GuidanceTerm("c1", uniform_gsf(TemporalProfile.constant(s1 + s2)))],
    )
    split = compose(
        flat2_model, x, 4, sched,
        [
            GuidanceTerm("c1", uniform_gsf(TemporalProfile.constant(s1))),
            GuidanceTerm("c1", uniform_gsf(TemporalProfile.constant(s2))),
        ],
    )
    assert np.allclose(combined.values, split.values, rtol=1e-12, atol=1e-12)


def test_all_ones_mask_matches_uniform_bit_exact():
    sched = linear_beta_schedule(8, 1e-3, 0.2)
    model = builtin_model("pattern_16x16")
    x = Field(model.shape, np.linspace(-1, 1, model.shape.volume))
    ones = SpatialMask.from_field(Field.full(model.shape, 1.0))
    t_uniform = GuidanceTerm("style", GSF(TemporalProfile.constant(1.5), SpatialMask.uniform()))
    t_ones = GuidanceTerm("style", GSF(TemporalProfile.constant(1.5), ones))
    a = compose(model, x, 2, sched, [t_uniform])
    b = compose(model, x, 2, sched, [t_ones])
    assert np.array_equal(a.values, b.values)


def test_zero_scale_transparency_bit_exact(sched, flat2_model):
    x = Field(Shape.flat(2), [0.33, -0.44])
    active = [GuidanceTerm("c1", uniform_gsf(TemporalProfile.constant(0.8)))]
    # ramp_up with onset 0.5 is identically zero for t >= 0.5; at step where
    # t=1 every profile with m=0 is zero too
    dead = GuidanceTerm("c2", uniform_gsf(TemporalProfile.constant(0.0)))
    with_dead = compose(flat2_model, x, 1, sched, active + [dead])
    without = compose(flat2_model, x, 1, sched, active)
    assert np.array_equal(with_dead.values, without.values)


def test_oracle_call_count(monkeypatch, sched, flat2_model):
    calls = []
    real = models_mod.predict_noise

    def counting(model, condition, x, alpha_bar):
        calls.append(condition)
        return real(model, condition, x, alpha_bar)

    monkeypatch.setattr(models_mod, "predict_noise", counting)
    x = Field(Shape.flat(2), [0.0, 0.0])
    terms = [
        GuidanceTerm("c1", uniform_gsf(TemporalProfile.constant(0.5))),
        GuidanceTerm("c1", uniform_gsf(TemporalProfile.constant(1.5))),
        GuidanceTerm("c2", uniform_gsf(TemporalProfile.constant(0.0))),
    ]
    compose(flat2_model, x, 3, sched, terms)
    # 2 distinct conditions + the null pass, despite 3 terms
    assert len(calls) == 3
    assert calls.count(NULL_CONDITION) == 1


def test_compose_rejects_mask_shape_mismatch(sched):
    model = builtin_model("pattern_16x16")
    wrong = SpatialMask.from_field(Field.full(Shape.grid(8, 8), 1.0))
    term = GuidanceTerm("style", GSF(TemporalProfile.constant(1.0), wrong))
    x = Field.zeros(model.shape)
    with pytest.raises(ShapeMismatchError):
        compose(model, x, 0, sched, [term])


# ---------------------------------------------------------------------------
# norm maps
# ---------------------------------------------------------------------------


def test_norm_map_constant_field():
    g = Field.full(Shape.grid(4, 4), -2.5)
    assert np.array_equal(guidance_norm_map(g).values, np.ones(16))


def test_norm_map_one_hot():
    vals = np.zeros(16)
    vals[5] = -3.0
    out = guidance_norm_map(Field(Shape.grid(4, 4), vals))
    expected = np.zeros(16)
    expected[5] = 1.0
    assert np.array_equal(out.values, expected)


def test_norm_map_zero_field_and_flat_error():
    assert np.array_equal(guidance_norm_map(Field.zeros(Shape.grid(3, 3))).values, np.zeros(9))
    with pytest.raises(ShapeMismatchError):
        guidance_norm_map(Field.zeros(Shape.flat(9)))
