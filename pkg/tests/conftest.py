import numpy as np
import pytest

from jcladder.hilbert import HilbertDim
from jcladder.jaynes_cummings import PulseParams, SystemParams, ghz

TAU_P = 0.0244  # ns


@pytest.fixture
def fig2_params():
    """Fig. 2 system: g = 2pi 40 GHz, kappa = 2pi 4 GHz, gamma = 2pi 0.16 GHz, no dephasing."""
    return SystemParams(g=ghz(40), kappa=ghz(4), gamma=ghz(0.16))


@pytest.fixture
def fig2_pulse():
    return PulseParams(ghz(9), TAU_P)


@pytest.fixture
def exp_params():
    """Experimental system of Figs. 3-4."""
    return SystemParams(g=ghz(21), kappa=ghz(27), gamma=ghz(0.16), gamma_d=ghz(1))


@pytest.fixture
def dim12():
    return HilbertDim(12)


def random_state(rng, size):
    psi = rng.normal(size=size) + 1j * rng.normal(size=size)
    return psi / np.linalg.norm(psi)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion; printed in the summary."""

    def _report(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
