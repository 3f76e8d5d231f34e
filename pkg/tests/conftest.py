import numpy as np
import pytest

from guidewalk import (
    ConditionModel,
    Field,
    GaussianComponent,
    Shape,
    linear_beta_schedule,
)
from guidewalk.models import NULL_CONDITION


def equal_sigma_model(means: dict[str, list[float]], sigma: float = 1.0) -> ConditionModel:
    """Single-Gaussian conditions sharing one variance, on a flat shape."""
    d = len(next(iter(means.values())))
    shape = Shape.flat(d)
    conds = {
        cid: (GaussianComponent(Field(shape, np.array(mu, dtype=float)), sigma**2, 1.0),)
        for cid, mu in means.items()
    }
    assert NULL_CONDITION in conds
    return ConditionModel(shape, conds)


@pytest.fixture
def small_schedule():
    return linear_beta_schedule(20, 1e-3, 0.2)


@pytest.fixture
def flat2_model():
    return equal_sigma_model(
        {NULL_CONDITION: [0.0, 0.0], "c1": [1.0, -0.5], "c2": [-0.75, 2.0]}
    )
