from __future__ import annotations

import pytest

from homeocoupling import load_model
from homeocoupling.analysis import foodshare_world
from homeocoupling.config import make_world
from homeocoupling.social import Condition, Lesion, SocialConfig


@pytest.fixture(scope="session")
def model():
    return load_model()


@pytest.fixture
def foodshare(model):
    def build(lam: float = 1.0, condition: Condition = Condition.AFFECTIVE_DIRECT, **fs):
        return foodshare_world(model, lam, condition, **fs)

    return build


@pytest.fixture
def corridor(model):
    def build(condition="affective_direct", lam=1.0, lesion="sham", load="low", with_partner=True, m=None):
        m = m or model
        social = SocialConfig(Condition(condition), lam, Lesion(lesion), m.decoy_energy)
        return make_world("corridor", social, m, load, with_partner)

    return build
