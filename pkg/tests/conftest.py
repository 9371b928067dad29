"""Shared fixtures and independent oracles for the test suite."""
import math

import numpy as np
import pytest

from secondvar.cylinder import CylinderModuli, omega_family, sigma1_critical_data
from secondvar.torus import TorusModuli, default_perturbation, lambda1_critical_data

ACCEPTANCE_LINES = []


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# -- oracles -----------------------------------------------------------------

def brute_force_torus_spectrum(a, b, box=3):
    """Eigenvalues ``4 pi^2 |gamma*|^2`` over ``|m|, |n| <= box``.

    The dual lattice is obtained from the inverse transpose of the lattice
    basis matrix, independently of the closed form used by the package.
    """
    basis = np.array([[1.0, a], [0.0, b]])
    dual = np.linalg.inv(basis).T
    values = []
    for m in range(-box, box + 1):
        for n in range(-box, box + 1):
            g = dual @ np.array([m, n], dtype=float)
            values.append(4.0 * math.pi ** 2 * float(g @ g))
    return np.sort(np.array(values))


def multiplicity_of_first(values, rtol=1e-9):
    nonzero = values[values > 1e-9]
    first = nonzero[0]
    return first, int(np.sum(np.abs(nonzero - first) <= rtol * first))


def steklov_by_extension(n, profile, T, h=1e-5):
    """Normal derivative over trace for ``cos(n theta) * profile(n t)`` at ``t = T``.

    Uses a central difference in ``t``; the outward normal at ``t = T`` is
    ``+d/dt``.
    """
    if n == 0:
        f = (lambda t: 1.0) if profile == "even" else (lambda t: t)
    else:
        f = (lambda t: math.cosh(n * t)) if profile == "even" else (lambda t: math.sinh(n * t))
    deriv = (f(T + h) - f(T - h)) / (2 * h)
    value = f(T)
    return deriv / value if value != 0 else 0.0


# -- fixtures ----------------------------------------------------------------

@pytest.fixture
def square_torus():
    m = TorusModuli(0.5, 1.0)
    omega = default_perturbation(m)
    return m, omega, lambda1_critical_data(m, omega)


@pytest.fixture
def cylinder_one():
    c = CylinderModuli(1.0)
    omega = omega_family(c, 0.2)
    return c, omega, sigma1_critical_data(c, omega)
