"""Plugging in a user-defined Hamiltonian.

A model supplies H, H_p, H_pp, H_x, a bound alpha on |H_x| / (1 + |p|) and
a bound on |H_p| over balls.  Here H = sum_j (cosh p_j - 1), whose
Legendre transform is computed numerically by the library.
"""
import numpy as np

from hjsolve import hamiltonian as hm
from hjsolve import initial_data as idata
from hjsolve.lattice import Cone, Lattice
from hjsolve.oracle import hopf_lax_batch
from hjsolve.characteristics import interp_v
from hjsolve.scheme import solve

d = 1
model = hm.HamiltonianModel(
    dim=d,
    eval=lambda x, t, p: np.sum(np.cosh(np.asarray(p, float)) - 1.0, axis=-1),
    grad_p=lambda x, t, p: np.sinh(np.asarray(p, float)),
    hess_pp=lambda x, t, p: np.cosh(np.asarray(p, float))[..., :, None] * np.eye(d),
    grad_x=lambda x, t, p: np.zeros(np.shape(p)),
    alpha=0.0,
    hp_bound=lambda radius: float(np.sinh(radius)),
    name="cosh",
    x_independent=True,
)

xi = np.array([[0.5], [2.0]])
lv = hm.legendre(model, np.zeros(1), 0.0, xi)
closed = xi[:, 0] * np.arcsinh(xi[:, 0]) - np.sqrt(1 + xi[:, 0] ** 2) + 1
print("numeric L:", lv.value, " closed form:", closed)

T = 0.5
v0 = idata.neg_abs(1)
consts = hm.scheme_constants(model, T, v0.lip, 1.0)
print(f"constants from {consts.source}: lambda1 = {consts.lambda1:.4f}")
for dx in (0.02, 0.01, 0.005):
    lat = Lattice.for_horizon(1, dx, 0.9 * consts.lambda1, T, Cone((0,), int(1.5 / dx)))
    res = solve(v0, lat, model, consts)
    X = np.linspace(-0.5, 0.5, 21)[:, None]
    err = np.max(np.abs(interp_v(res, X, 0.4) - hopf_lax_batch(model, v0, X, 0.4).value))
    print(f"dx={dx:<6g} sup error at t=0.4: {err:.3e}")
