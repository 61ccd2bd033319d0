import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjsolve import hamiltonian as hm
from hjsolve.errors import ConjugationError, ConstantsError, ModelEvaluationError

from conftest import cosh_model, speed_model


@pytest.mark.parametrize("name", hm.builtin_names())
@pytest.mark.parametrize("dim", [1, 2])
def test_builtin_lagrangian_matches_closed_form(name, dim):
    model = hm.get_model(name, dim)
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 1, (50, dim))
    xi = rng.uniform(-2, 2, (50, dim))
    lv = hm.legendre(model, x, 0.3, xi)
    np.testing.assert_allclose(lv.value, model.lagrangian(x, 0.3, xi), atol=1e-12)
    np.testing.assert_allclose(model.grad_p(x, 0.3, lv.p_star), xi, atol=1e-12)


def test_quadratic_values():
    m = hm.quadratic(1)
    assert hm.eval_h(m, [0.0], 0.0, [2.0]) == pytest.approx(2.0)
    assert float(hm.legendre(m, [0.0], 0.0, [3.0]).value) == pytest.approx(4.5)


def test_cosh_user_model_conjugate():
    m = cosh_model(1)
    xi = np.linspace(-5, 5, 41)[:, None]
    lv = hm.legendre(m, np.zeros(1), 0.0, xi)
    np.testing.assert_allclose(lv.value, m.lagrangian(None, 0.0, xi), atol=1e-11)
    np.testing.assert_allclose(lv.p_star[:, 0], np.arcsinh(xi[:, 0]), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0, 1))
def test_biconjugation_recovers_h(p1, p2, x):
    m = hm.anisotropic_quadratic(2)
    p = np.array([p1, p2])
    radius = 1.05 * float(np.max(np.abs(m.grad_p(None, 0.0, p)))) + 0.1
    val = hm.biconjugate(m, np.array([x, 0.0]), 0.0, p, radius, n=9)
    assert val[0] == pytest.approx(float(m.eval(None, 0.0, p)), abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 1))
def test_legendre_inverse_of_hp(p, x):
    m = speed_model(1)
    xi = m.grad_p(np.array([x]), 0.0, np.array([p]))
    lv = hm.legendre(m, np.array([x]), 0.0, xi)
    assert lv.grad_xi[0] == pytest.approx(p, abs=1e-10)
    # L_x = -H_x at the conjugate point
    assert lv.grad_x[0] == pytest.approx(-m.grad_x(np.array([x]), 0.0, np.array([p]))[0], abs=1e-9)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_legendre_nonconvergence_raises():
    m = cosh_model(1)
    with pytest.raises(ConjugationError) as err:
        hm.legendre(m, [0.0], 0.0, [1e6], max_iter=3)
    assert err.value.residual > 0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_eval_h_rejects_non_finite():
    m = cosh_model(1)
    with pytest.raises(ModelEvaluationError):
        hm.eval_h(m, [0.0], 0.0, [1e4])


def test_constants_closed_form():
    c = hm.scheme_constants(hm.quadratic(1), T=0.5, r=1.0, R=1.0)
    assert c.source == "closed-form"
    assert c.L_star == 0.0 and c.alpha2 == 0.0
    assert c.deriv_bound == 2.0
    assert c.lambda1 == pytest.approx(0.5)
    assert c.speed_bound == pytest.approx(2.0)


def test_constants_quadratic_cosine():
    c = hm.scheme_constants(hm.quadratic_cosine(2), T=1.0, r=1.0, R=1.0)
    # L* = -d, alpha1 = T d + R, alpha2 = 2 pi (alpha1 + R + (1 + 2 d) T)
    assert c.L_star == -2.0
    assert c.alpha1 == pytest.approx(3.0)
    assert c.alpha2 == pytest.approx(2 * np.pi * (3.0 + 1.0 + 5.0))
    assert c.deriv_bound == 1.0 + 1.0 + c.alpha2
    assert c.lambda1 == pytest.approx(1.0 / (2 * c.deriv_bound))
    assert c.theta == pytest.approx(4 * np.pi**2)


def test_constants_sampled_for_user_models():
    c = hm.scheme_constants(speed_model(1), T=1.0, r=1.0, R=1.0)
    assert c.source == "sampled"
    assert c.L_star == 0.0
    assert c.theta > 0  # L_xx of |xi|^2 / (2 c(x)) does not vanish
    cc = hm.scheme_constants(cosh_model(1), T=1.0, r=0.5, R=1.0)
    assert cc.source == "sampled" and cc.theta == pytest.approx(0.0, abs=1e-6)
    assert cc.lambda1 == pytest.approx(1.0 / np.sinh(1.5))


def test_constants_reject_bad_input():
    with pytest.raises(ValueError):
        hm.scheme_constants(hm.quadratic(1), T=0.0, r=1.0, R=1.0)
    m = hm.HamiltonianModel(1, lambda x, t, p: np.full(np.shape(p)[:-1], np.nan), lambda x, t, p: p,
                            lambda x, t, p: np.ones(np.shape(p) + (1,)), lambda x, t, p: 0 * p,
                            0.0, lambda r: r)
    with pytest.raises((ConstantsError, ConjugationError)):
        hm.scheme_constants(m, 1.0, 1.0, 1.0)


def test_unknown_model():
    with pytest.raises(KeyError):
        hm.get_model("nope")
