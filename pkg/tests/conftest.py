import numpy as np
import pytest

import gpfaraday as gp

_CRITERION_LINES = []


def record_criterion(name, passed, details=""):
    """Collect one acceptance pass/fail line for the terminal summary."""
    status = "PASS" if passed else "FAIL"
    _CRITERION_LINES.append(f"[{status}] {name}" + (f" :: {details}" if details
                                                    else ""))


def pytest_terminal_summary(terminalreporter):
    if _CRITERION_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def elongated_setup():
    return gp.PhysicalSetup()


@pytest.fixture(scope="session")
def elongated_grid():
    return gp.Grid(points=(2048,), extents=(256.0,))


@pytest.fixture(scope="session")
def elongated_ground(elongated_setup, elongated_grid):
    tf = gp.thomas_fermi_profile(elongated_setup, elongated_grid)
    fld, report = gp.imaginary_time_solve(tf, elongated_setup,
                                          gp.GroundStateConfig(tolerance=1e-9))
    return fld, report


@pytest.fixture(scope="session")
def pancake_setup():
    return gp.PhysicalSetup(trap_freqs=(2 * np.pi * 0.05, 2 * np.pi * 0.05,
                                        2 * np.pi * 1.5))


@pytest.fixture(scope="session")
def pancake_grid():
    return gp.Grid(points=(128, 128), extents=(32.0, 32.0))
