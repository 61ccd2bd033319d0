"""Quickstart: solve v_t + |v_x|^2 / 2 = 0 with a concave kink and inspect the result.

The initial data v0(x) = -|x| has a concave corner at the origin.  Characteristics
run into it from both sides, so the corner persists: v(x, t) = -|x| - t/2.
"""
import numpy as np

from hjsolve import hamiltonian as hm
from hjsolve import initial_data as idata
from hjsolve.characteristics import interp_u, interp_v
from hjsolve.lattice import Cone, Lattice
from hjsolve.oracle import hopf_lax_batch
from hjsolve.scheme import check_cfl, solve

T = 0.5
model = hm.quadratic(1)
v0 = idata.neg_abs(1)

# The constants fix the admissible Courant number lambda1 and the a priori gradient bound.
consts = hm.scheme_constants(model, T=T, r=v0.lip, R=1.0)
print(f"lambda1 = {consts.lambda1:.4f}, |D_x v| <= {consts.deriv_bound:.3f}")

dx = 0.01
lat = Lattice.for_horizon(1, dx, 0.9 * consts.lambda1, T, Cone((0,), 200))
print(check_cfl(consts, lat))

res = solve(v0, lat, model, consts)
print(f"{lat.horizon_steps} steps to t = {lat.t_final:.4f}; max |D_x v| per level peaks at {max(res.max_grad):.3f}")

# Compare the piecewise-constant interpolants with the exact solution.
X = np.linspace(-1, 1, 8)[:, None]
t = 0.4
exact = hopf_lax_batch(model, v0, X, t)
print("\n   x     v_D      v     u_D     v_x")
for x, vd, ve, ud, ue in zip(X[:, 0], interp_v(res, X, t), exact.value, interp_u(res, X, t, 0), exact.gradient[:, 0]):
    print(f"{x:5.2f} {vd:7.4f} {ve:7.4f} {ud:7.3f} {ue:7.3f}")
