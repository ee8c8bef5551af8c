import numpy as np
import pytest

from bayescat.bank import Item, ItemBank
from bayescat.posterior import AbilityGrid, PriorSpec


@pytest.fixture(scope="session")
def grid():
    return AbilityGrid()


@pytest.fixture(scope="session")
def coarse_grid():
    return AbilityGrid(size=501)


@pytest.fixture()
def uniform_prior():
    return PriorSpec(kind="uniform")


@pytest.fixture()
def normal_prior():
    return PriorSpec(kind="truncated-normal", mu=0.0, sigma=1.0)


def random_history_difficulties(rng, n):
    return rng.uniform(-4.0, 4.0, size=n)


@pytest.fixture()
def tiny_bank():
    return ItemBank(
        [
            Item(id="easy", difficulty=-1.5),
            Item(id="mid", difficulty=0.0),
            Item(id="hard", difficulty=2.0),
        ],
        consume_on_use=True,
    )
