import math

import numpy as np
import pytest

from eprloss.experiment import ExperimentConfig

TWO_PI = 2 * math.pi

_ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title}" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_epr_config(rng, r_max=2.0, beta_max=3.0):
    phases = rng.uniform(0, TWO_PI, size=4)
    return ExperimentConfig(
        r=rng.uniform(0, r_max),
        s=rng.uniform(0, r_max),
        beta1=rng.uniform(0, beta_max),
        beta3=rng.uniform(0, beta_max),
        phi1=phases[0],
        phi2=phases[1],
        phi3=phases[2],
        phi4=phases[3],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20100615)
