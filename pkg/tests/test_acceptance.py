"""The twelve acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line (see ``conftest.record``), shown in the
terminal summary, and then asserts.
"""
import time
import warnings

import numpy as np
import pytest

from hjsolve import checks
from hjsolve import hamiltonian as hm
from hjsolve import initial_data as idata
from hjsolve.errors import StabilityError
from hjsolve.harness import (Config, run_characteristic_study, run_contraction, run_convergence,
                             run_gradient_l1, run_variance_sweep)
from hjsolve.lattice import Cone, Lattice, Periodic
from hjsolve.scheme import Layer, solve, step

from conftest import cosh_model, record


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_01_kernel_normalization():
    (ok, detail), wall = timed(lambda: checks.check_kernel(10_000, dims=(1, 2, 3)))
    ok = ok and wall < 1.0
    assert record(1, "kernel normalization", ok, f"{detail}, 3 x 10^4 controls, {wall:.2f}s")


def test_02_one_step_identity():
    def run():
        rows = []
        for d in (1, 2):
            for model in [hm.get_model(n, d) for n in hm.builtin_names()] + [cosh_model(d)]:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    rows.append((model.name, d) + checks.check_one_step(model, 100, seed=d))
        return rows
    rows, wall = timed(run)
    ok = all(r[2] for r in rows) and wall < 10
    worst = max(rows, key=lambda r: float(r[3].split()[1].rstrip(",")))
    assert record(2, "one-step variational identity", ok,
                  f"{len(rows)} model/dimension pairs x 100 states; worst {worst[0]} d={worst[1]}: "
                  f"{worst[3]}; {wall:.1f}s"), rows


def test_03_dynamic_programming_identity():
    def run():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            # (2d)^steps = 4096 for both dimensions
            return [checks.check_dp(hm.quadratic_cosine(d), d, steps, 20, seed=d)
                    for d, steps in ((1, 12), (2, 6))]
    rows, wall = timed(run)
    ok = all(r[0] for r in rows) and wall < 30
    assert record(3, "dynamic-programming identity", ok,
                  f"d=1: {rows[0][1]}; d=2: {rows[1][1]}; 20 controls each, {wall:.1f}s")


def test_04_variational_representation():
    def run():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return [checks.check_representation(hm.quadratic_cosine(d), idata.cosine(d, 0.2), d, steps,
                                                n_apex=20, n_perturb=50, seed=d)
                    for d, steps in ((1, 8), (2, 4))]
    rows, wall = timed(run)
    ok = all(r[0] for r in rows) and wall < 60
    assert record(4, "variational representation", ok,
                  f"d=1: {rows[0][1]}; d=2: {rows[1][1]}; 20 apexes x 50 perturbations, {wall:.1f}s")


def test_05_variance_bound():
    budgets = {"enum_cap": 2**20, "mc_samples": 100_000}
    cfgs = [Config.from_dict({"dim": 1, "T": 0.5, "dx": [0.1, 0.05, 0.025], "budgets": budgets}),
            Config.from_dict({"dim": 2, "T": 0.2, "dx": [0.1, 0.05], "budgets": budgets})]
    rows, wall = timed(lambda: [r for c in cfgs for r in run_variance_sweep(c)])
    holds = all(r.holds for r in rows)
    # xi = 0: each step adds dx^2 / d per axis, so sigma equals bound / d (the bound itself in d = 1)
    eq = max(float(np.max(np.abs(r.sigma - r.bound[:, None] / r.sigma.shape[1])))
             for r in rows if r.control == "zero")
    eq1 = max(float(np.max(np.abs(r.sigma[:, 0] - r.bound)))
              for r in rows if r.control == "zero" and r.sigma.shape[1] == 1)
    methods = sorted({r.method for r in rows})
    ok = holds and eq <= 1e-12 and eq1 <= 1e-12 and wall < 120
    assert record(5, "variance bound", ok,
                  f"{len(rows)} control/dx rows ({'+'.join(methods)}), all bounds hold={holds}; "
                  f"zero control |sigma - bound| d=1 {eq1:.1e}, |sigma - bound/d| {eq:.1e}; {wall:.1f}s")


def test_06_a_priori_derivative_bound():
    cases = []

    def run():
        for d, dx in ((1, 0.01), (2, 0.04)):
            for model, v0, T in ((hm.quadratic(d), idata.neg_abs(d), 0.5),
                                 (hm.quadratic_cosine(d), idata.cosine(d, 0.2), 0.2)):
                c = hm.scheme_constants(model, T, v0.lip, v0.bound or 1.0)
                lat = Lattice.for_horizon(d, dx, 0.9 * c.lambda1, T, Cone((0,) * d, int(1 / dx)))
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    res = solve(v0, lat, model, c)  # raises StabilityError on violation
                cases.append((model.name, d, max(res.max_grad), c.deriv_bound))
        # the in-step assertion fires on data beyond the bound
        model = hm.quadratic(1)
        c = hm.scheme_constants(model, 1.0, 1.0, 1.0)
        lat = Lattice(1, 0.1, 0.04, 1, Cone((0,), 0))
        try:
            step(Layer(0, np.array([-1]), np.array([0.0, np.nan, 1.0]), 0.1), lat, model, c)
            return False
        except StabilityError:
            return True
    fired, wall = timed(run)
    ok = fired and all(g <= b for _, _, g, b in cases)
    worst = max(cases, key=lambda r: r[2] / r[3])
    assert record(6, "a priori derivative bound", ok,
                  f"{len(cases)} solves within 1+r+alpha2 (closest: {worst[0]} d={worst[1]} "
                  f"{worst[2]:.3g} <= {worst[3]:.3g}); violation raises={fired}; {wall:.1f}s")


def test_07_affine_exactness():
    def run():
        out = []
        for d in (1, 2):
            for model in (hm.quadratic(d), hm.anisotropic_quadratic(d), cosh_model(d)):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    out.append(checks.check_affine(model, d, dxs=(0.1, 0.05, 0.02), steps=8))
        return out
    rows, wall = timed(run)
    ok = all(r[0] for r in rows) and wall < 5
    worst = max(float(r[1].split()[-1]) for r in rows)
    assert record(7, "affine exactness", ok, f"{len(rows)} model/dimension pairs, 3 grids; "
                                             f"max node error {worst:.1e}; {wall:.1f}s")


@pytest.mark.slow
def test_08_convergence_rate():
    c1 = Config.from_dict({"dim": 1, "T": 0.5, "dx": [0.04, 0.02, 0.01, 0.005], "K": [-2, 2]})
    c2 = Config.from_dict({"dim": 2, "v0": {"name": "neg_norm1"}, "T": 0.5, "dx": [0.08, 0.04, 0.02],
                           "K": [-2, 2]})
    (r1, r2), wall = timed(lambda: (run_convergence(c1), run_convergence(c2)))
    ok = (r1.monotone() and r2.monotone() and r1.rate >= 0.45 and r2.rate >= 0.45 and wall < 300)
    fmt = lambda r: ", ".join(f"{e:.3g}" for e in r.errors)
    assert record(8, "convergence rate", ok,
                  f"d=1 sup errors [{fmt(r1)}] rate {r1.rate:.3f}; d=2 [{fmt(r2)}] rate {r2.rate:.3f}; "
                  f"beta_hat {r1.beta_hat:.3f}/{r2.beta_hat:.3f}; {wall:.1f}s")


def test_09_gradient_l1_convergence():
    cfg = Config.from_dict({"dim": 1, "T": 0.5, "dx": [0.04, 0.02, 0.01, 0.005], "K": [-2, 2],
                            "init_mode": "cell_average"})
    rep, wall = timed(lambda: run_gradient_l1(cfg, t=0.5))
    tot = rep.total()
    factor = tot[0] / tot[-1]
    ok = factor >= 2 and wall < 120
    assert record(9, "gradient L1 convergence", ok,
                  f"L1 errors [{', '.join(f'{e:.3g}' for e in tot)}], end-to-end factor {factor:.2f}, "
                  f"monotone={rep.decreasing()}; {wall:.1f}s")


@pytest.mark.slow
def test_10_characteristic_convergence():
    cfg = Config.from_dict({"dim": 1, "T": 0.55, "dx": [0.01, 0.005, 0.0025, 0.00125], "K": [-2, 2],
                            "seed": 0})
    rep, wall = timed(lambda: run_characteristic_study(cfg, [1.0], 0.5, eps=0.1, n_paths=1000))
    ok = (rep.distances_decrease() and rep.fractions_increase() and rep.fraction_within[-1] >= 0.95
          and wall < 120)
    assert record(10, "characteristic convergence", ok,
                  f"mean-path C0 distance [{', '.join(f'{v:.3g}' for v in rep.mean_distance)}] "
                  f"({rep.n_queries} queries near (1, 0.5)); fraction within 0.1 "
                  f"[{', '.join(f'{v:.3f}' for v in rep.fraction_within)}]; {wall:.1f}s")


def test_11_l1_contraction():
    def run():
        out = []
        for seed in range(5):
            cfg = Config.from_dict({"dim": 2, "domain": {"type": "periodic", "period": 1.0},
                                    "dx": [1 / 32], "T": 0.5, "seed": 2 * seed})
            out.append(run_contraction(cfg, levels=10, half=4))  # raises ContractionError
        return out
    reps, wall = timed(run)
    ok = all(r.monotone for r in reps) and wall < 60
    s = reps[0].sums
    assert record(11, "L1 contraction", ok,
                  f"5 random pairs, 10 levels, sums non-increasing in k; first pair: "
                  f"top box {s[-1]:.4g} <= bottom box {s[0]:.4g}; {wall:.1f}s")


def test_12_legendre_round_trip():
    def run():
        return [(n, d) + checks.check_legendre(hm.get_model(n, d), 1000, 1000, seed=d)
                for n in hm.builtin_names() for d in (1, 2)]
    rows, wall = timed(run)
    ok = all(r[2] for r in rows) and wall < 10
    worst_bi = max(float(r[3].split()[1].rstrip(",")) for r in rows)
    assert record(12, "Legendre round-trip", ok,
                  f"{len(rows)} model/dimension pairs, worst biconjugation {worst_bi:.1e}; {wall:.1f}s")
