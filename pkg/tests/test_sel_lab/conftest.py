import math

import pytest

from sel_lab.geometry import Domain, build_grid
from sel_lab.operators import OperatorSpec


@pytest.fixture
def lap():
    return OperatorSpec.laplacian()


@pytest.fixture
def unit():
    return Domain.interval(0.0, 1.0)


@pytest.fixture
def graded_grid(unit):
    return build_grid(unit, 401, "boundary_graded", 1.0)


@pytest.fixture
def pi_grid():
    return build_grid(Domain.interval(0.0, math.pi), 201)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.delenv("SEL_OUTPUT_DIR", raising=False)
    return tmp_path / "out"
