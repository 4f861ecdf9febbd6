from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from vpsdp.core import QuadraticInstance

DATA = Path(__file__).resolve().parent.parent / "data"

_acceptance_lines = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    _acceptance_lines.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def data_dir():
    return DATA


def random_instance(n, rng, integer=False, scale=10.0, storage="dense"):
    if integer:
        A = rng.integers(-10, 11, size=(n, n)).astype(float)
        b = rng.integers(-10, 11, size=n).astype(float)
    else:
        A = rng.normal(scale=scale, size=(n, n))
        b = rng.normal(scale=scale, size=n)
    return QuadraticInstance.create(A + A.T, b, storage=storage)


@st.composite
def instances(draw, min_n=1, max_n=8):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    integer = draw(st.booleans())
    return random_instance(n, np.random.default_rng(seed), integer=integer)
