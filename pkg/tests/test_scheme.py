import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjsolve import hamiltonian as hm
from hjsolve import initial_data as idata
from hjsolve.errors import ConfigurationError, OutOfDomainError, StabilityError
from hjsolve.lattice import Cone, Lattice, Periodic
from hjsolve.scheme import (Layer, check_cfl, discretize_initial, read_layers_csv, scheme_residual,
                            solve, step, write_layers_csv)

from conftest import cosh_model, speed_model


def quad_setup(dim=1, dx=0.1, steps=4, domain=None, T=1.0, r=1.0):
    model = hm.quadratic(dim)
    c = hm.scheme_constants(model, T, r, 1.0)
    lat = Lattice(dim, dx, 0.9 * c.lambda1 * dx, steps, domain or Cone((0,) * dim, 3))
    return model, c, lat


def test_single_step_by_hand():
    model, c, lat = quad_setup(steps=1, domain=Cone((0,), 0))
    # level 0 box is m = -1, 0, 1; odd nodes carry values
    layer = Layer(0, np.array([-1]), np.array([0.2, np.nan, -0.1]), lat.dx)
    nxt = step(layer, lat, model, c)
    g = (-0.1 - 0.2) / (2 * lat.dx)
    assert nxt.value([0]) == pytest.approx(0.05 - lat.dt * 0.5 * g * g, abs=1e-15)
    assert nxt.lo[0] == 0 and nxt.values.shape == (1,)


def test_affine_data_is_exact():
    model = hm.anisotropic_quadratic(2)
    a = np.array([0.4, -0.3])
    c = hm.scheme_constants(model, 1.0, 0.5, 1.0, h=0.2)
    lat = Lattice(2, 0.05, 0.9 * c.lambda1 * 0.05, 6, Cone((0, 0), 2))
    res = solve(idata.affine(2, a), lat, model, c)
    Ha = float(model.eval(None, 0.0, a))
    for k, layer in res.layers.items():
        nodes, vals = layer.nodes()
        exact = lat.coords(nodes) @ a - lat.time(k) * Ha + 0.2 * lat.time(k)
        assert np.max(np.abs(vals - exact)) <= 1e-12


def test_periodic_and_cone_agree():
    model = hm.quadratic_cosine(1)
    v0 = idata.cosine(1, amp=0.2, period=1.0)
    c = hm.scheme_constants(model, 0.2, v0.lip, v0.bound)
    dx = 1 / 40
    dt = 0.9 * c.lambda1 * dx
    steps = 8
    per = solve(v0, Lattice(1, dx, dt, steps, Periodic((40,))), model, c)
    cone = solve(v0, Lattice(1, dx, dt, steps, Cone((20,), 3)), model, c)
    nodes, vals = cone.final.nodes()
    np.testing.assert_allclose(per.final.values_at(nodes), vals, atol=1e-14)


def test_h_shifts_solution():
    model = hm.quadratic(1)
    v0 = idata.neg_logcosh(1)
    lat = Lattice(1, 0.1, 0.04, 5, Cone((0,), 2))
    base = solve(v0, lat, model, hm.scheme_constants(model, 1.0, 1.0, 1.0))
    shifted = solve(v0, lat, model, hm.scheme_constants(model, 1.0, 1.0, 1.0, h=0.7))
    for k in range(6):
        d = shifted.layer(k).values - base.layer(k).values
        np.testing.assert_allclose(d[~np.isnan(d)], 0.7 * lat.time(k), atol=1e-14)


def test_cfl_violation_is_refused():
    model, c, _ = quad_setup()
    lat = Lattice(1, 0.1, 1.01 * c.lambda1 * 0.1, 3, Cone((0,), 1))
    assert not check_cfl(c, lat).passed
    with pytest.raises(ConfigurationError):
        solve(idata.neg_abs(1), lat, model, c)


def test_stability_error_on_large_gradient():
    model, c, lat = quad_setup(steps=1, domain=Cone((0,), 0))
    layer = Layer(0, np.array([-1]), np.array([0.0, np.nan, 10.0]), lat.dx)
    with pytest.raises(StabilityError) as err:
        step(layer, lat, model, c)
    assert err.value.value > c.deriv_bound


def test_theta_warning_for_coarse_grid():
    model = hm.quadratic_cosine(1)
    c = hm.scheme_constants(model, 1.0, 0.2, 0.2)
    lat = Lattice(1, 0.1, 0.5 * c.lambda1 * 0.1, 2, Periodic((10,)))
    assert not check_cfl(c, lat).theta_ok
    with pytest.warns(UserWarning, match="theta"):
        solve(idata.cosine(1, 0.02), lat, model, c)


def test_cell_average_matches_pointwise_on_affine_data():
    lat = Lattice(2, 0.1, 0.02, 2, Cone((0, 0), 1))
    v0 = idata.affine(2, [0.5, -1.0], b=0.3)
    a = discretize_initial(v0, lat, "pointwise")
    b = discretize_initial(v0, lat, "cell_average")
    np.testing.assert_allclose(a.values, b.values, atol=1e-14, equal_nan=True)


def test_cell_average_smooths_kink():
    lat = Lattice(1, 0.1, 0.02, 1, Cone((0,), 0))
    v0 = idata.InitialData(lambda x: -np.abs(x[..., 0] - 0.1), lip=1.0, name="kink")
    layer = discretize_initial(v0, lat, "cell_average", s=64)
    # the kink sits on node 1; the average of -|x| over [-dx, dx] is -dx / 2
    assert layer.value([1]) == pytest.approx(-0.05, abs=1e-12)
    assert discretize_initial(v0, lat).value([1]) == 0.0


def test_initial_bound_warnings():
    lat = Lattice(1, 0.1, 0.02, 1, Cone((0,), 3))
    with pytest.warns(UserWarning):
        discretize_initial(idata.affine(1, [2.0]), lat, r=1.0)


def test_residual_is_round_off():
    model = hm.quadratic_cosine(2)
    v0 = idata.cosine(2, 0.1)
    c = hm.scheme_constants(model, 0.1, v0.lip, v0.bound)
    lat = Lattice(2, 1 / 16, 0.9 * c.lambda1 / 16, 4, Periodic((16, 16)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = solve(v0, lat, model, c)
    assert max(scheme_residual(res, k) for k in range(4)) < 1e-13


def test_user_models_solve_within_bound():
    for model in (cosh_model(1), speed_model(1)):
        v0 = idata.neg_logcosh(1)
        c = hm.scheme_constants(model, 0.5, 1.0, 1.0)
        lat = Lattice.for_horizon(1, 0.02, 0.9 * c.lambda1, 0.5, Cone((0,), 5))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = solve(v0, lat, model, c)
        assert max(res.max_grad) <= c.deriv_bound


def test_keep_and_missing_levels():
    model, c, lat = quad_setup(steps=6)
    res = solve(idata.neg_abs(1), lat, model, c, keep={3})
    assert sorted(res.layers) == [0, 3, 6]
    with pytest.raises(OutOfDomainError):
        res.layer(2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.02, 0.02), min_size=8, max_size=8),
       st.lists(st.floats(0.0, 0.02), min_size=8, max_size=8))
def test_scheme_is_monotone(v, bump):
    """Under the CFL condition, raising the data never lowers the next level."""
    model = hm.quadratic(1)
    c = hm.scheme_constants(model, 1.0, 1.0, 1.0)
    lat = Lattice(1, 0.1, 0.9 * c.lambda1 * 0.1, 1, Periodic((16,)))
    V = np.full(16, np.nan)
    V[1::2] = v
    W = V.copy()
    W[1::2] += bump
    a = step(Layer(0, np.zeros(1, np.int64), V, 0.1, np.array([16])), lat, model, c)
    b = step(Layer(0, np.zeros(1, np.int64), W, 0.1, np.array([16])), lat, model, c)
    ok = ~np.isnan(a.values)
    assert np.all(b.values[ok] >= a.values[ok] - 1e-15)


def test_csv_round_trip(tmp_path):
    model = hm.quadratic(2)
    c = hm.scheme_constants(model, 1.0, 1.0, 1.0)
    lat = Lattice(2, 0.1, 0.9 * c.lambda1 * 0.1, 2, Cone((0, 0), 1))
    res = solve(idata.neg_abs(2), lat, model, c)
    path = tmp_path / "layers.csv"
    write_layers_csv(res, path)
    text = path.read_text()
    assert text.startswith("# dx=0.1 dt=")
    assert text.splitlines()[1] == "k,m1,m2,v,dv1,dv2"
    meta, rows = read_layers_csv(path)
    assert meta["d"] == 2 and meta["model"] == "quadratic" and meta["dx"] == 0.1
    for k in range(3):
        layer = res.layer(k)
        sel = rows[rows[:, 0] == k]
        vals = sel[~np.isnan(sel[:, 3])]
        np.testing.assert_array_equal(vals[:, 3], layer.values_at(vals[:, 1:3].astype(int)))
        grads = sel[~np.isnan(sel[:, 4])]
        np.testing.assert_array_equal(grads[:, 4:], layer.gradients_at(grads[:, 1:3].astype(int)))
    # deterministic order: sorted by level, then index
    keys = [tuple(r) for r in rows[:, :3]]
    assert keys == sorted(keys)
