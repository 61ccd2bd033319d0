import numpy as np
import pytest

from hjsolve.hamiltonian import HamiltonianModel


def cosh_model(dim=1):
    """H = sum_j (cosh p_j - 1); L = sum_j (xi asinh xi - sqrt(1 + xi^2) + 1)."""
    def hess(x, t, p):
        p = np.asarray(p, float)
        return np.cosh(p)[..., :, None] * np.eye(dim)

    return HamiltonianModel(
        dim=dim,
        eval=lambda x, t, p: np.sum(np.cosh(np.asarray(p, float)) - 1.0, axis=-1),
        grad_p=lambda x, t, p: np.sinh(np.asarray(p, float)),
        hess_pp=hess,
        grad_x=lambda x, t, p: np.zeros(np.shape(p)),
        alpha=0.0,
        hp_bound=lambda radius: float(np.sinh(radius)),
        name="cosh",
        x_independent=True,
        lagrangian=lambda x, t, xi: np.sum(
            np.asarray(xi) * np.arcsinh(xi) - np.sqrt(1 + np.asarray(xi) ** 2) + 1.0, axis=-1),
    )


def speed_model(dim=1):
    """H = c(x) |p|^2 / 2 with c = 1 + sin(2 pi x_1) / 2; L = |xi|^2 / (2 c)."""
    def c(x):
        return 1.0 + 0.5 * np.sin(2 * np.pi * np.asarray(x, float)[..., 0])

    def grad_x(x, t, p):
        x = np.asarray(x, float)
        p = np.asarray(p, float)
        out = np.zeros(np.broadcast_shapes(x.shape, p.shape))
        out[..., 0] = np.pi * np.cos(2 * np.pi * x[..., 0]) * 0.5 * np.sum(p * p, axis=-1)
        return out

    return HamiltonianModel(
        dim=dim,
        eval=lambda x, t, p: c(x) * 0.5 * np.sum(np.asarray(p, float) ** 2, axis=-1),
        grad_p=lambda x, t, p: c(x)[..., None] * np.asarray(p, float),
        hess_pp=lambda x, t, p: c(x)[..., None, None] * np.broadcast_to(np.eye(dim), np.shape(p) + (dim,)),
        grad_x=grad_x,
        alpha=2 * np.pi,
        hp_bound=lambda radius: 1.5 * float(radius),
        name="variable-speed",
        lagrangian=lambda x, t, xi: 0.5 * np.sum(np.asarray(xi) ** 2, axis=-1) / c(x),
    )


@pytest.fixture
def cosh1():
    return cosh_model(1)


@pytest.fixture
def speed1():
    return speed_model(1)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def record(number, title, passed, detail):
    line = f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
