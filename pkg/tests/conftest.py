import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from dmtopo.algebra import PauliForm, pauli_compose

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def ssh_block(lam, theta):
    """The SSH loss block written out by hand, independent of the model code."""
    return np.array([[0.0, -1j * theta], [-1j * theta, -2.0 * lam]])


def taylor_expm(M, t, terms=30):
    """Truncated power series of exp(M t); an oracle that is exact at EPs."""
    out = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for j in range(1, terms):
        term = term @ (M * t) / j
        out = out + term
    return out


@st.composite
def complex_2x2(draw, scale=2.0):
    parts = draw(st.lists(st.floats(-scale, scale, allow_nan=False, allow_subnormal=False), min_size=8, max_size=8))
    return np.array(parts[:4]).reshape(2, 2) + 1j * np.array(parts[4:]).reshape(2, 2)


@st.composite
def pt_form_block(draw):
    """``alpha_X s0 + [gamma n1 + i rho (sin th n2 + cos th n3)] . sigma`` in a random frame."""
    alpha = draw(st.floats(-2.0, 0.0))
    gamma = draw(st.floats(0.0, 2.0))
    rho = draw(st.floats(0.0, 2.0))
    theta = draw(st.floats(-np.pi, np.pi))
    angles = draw(st.lists(st.floats(-np.pi, np.pi), min_size=3, max_size=3))
    a, b, c = angles
    Rz = lambda x: np.array([[np.cos(x), -np.sin(x), 0], [np.sin(x), np.cos(x), 0], [0, 0, 1]])
    Rx = lambda x: np.array([[1, 0, 0], [0, np.cos(x), -np.sin(x)], [0, np.sin(x), np.cos(x)]])
    Q = Rz(a) @ Rx(b) @ Rz(c)
    n1, n2, n3 = Q.T
    n = gamma * n1 + 1j * rho * (np.sin(theta) * n2 + np.cos(theta) * n3)
    return pauli_compose(PauliForm(alpha, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        title, status, elapsed = mod.RESULTS[n]
        took = "" if elapsed is None else f" ({elapsed:.2f}s)"
        terminalreporter.write_line(f"criterion {n:2d}: {status} {title}{took}")
