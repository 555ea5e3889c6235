from __future__ import annotations

import json

import pytest
from _shared import GOLDEN, scenario


@pytest.fixture(scope="session")
def golden() -> dict:
    return json.loads(GOLDEN.read_text())["entries"]


@pytest.fixture
def jiang():
    return scenario("jiang").problem


@pytest.fixture
def s3():
    return scenario("s3_rot").problem


@pytest.fixture
def s4():
    return scenario("s4_constant").problem


@pytest.fixture
def sin_p():
    return scenario("scaled_sin").problem


@pytest.fixture
def zero():
    return scenario("zero_f").problem
