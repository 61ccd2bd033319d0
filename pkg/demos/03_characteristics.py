"""Backward characteristics as random walks.

The minimizing control xi* = H_p(D_x v) drives a random walk on the
staggered lattice.  Its mean follows the true backward characteristic and
the walks concentrate around it as dx shrinks.
"""
import numpy as np

from hjsolve.characteristics import extract_characteristic
from hjsolve.harness import Config, run_characteristic_study
from hjsolve.lattice import Cone, Lattice
from hjsolve.oracle import exact_characteristic, hopf_lax
from hjsolve.scheme import solve

cfg = Config.from_dict({"v0": {"name": "neg_abs"}, "T": 0.6, "dx": [0.02, 0.01, 0.005]})
model, v0, consts = cfg.hamiltonian(), cfg.initial(), cfg.constants()

x, t = [1.0], 0.5
entry = hopf_lax(model, v0, x, t)
line = exact_characteristic(model, x, t, entry)
print(f"exact foot of the characteristic through (1, 0.5): y = {entry.minimizer[0]:.4f}")

lat = Lattice.for_horizon(1, 0.01, 0.9 * consts.lambda1, cfg.T, Cone((0,), 200))
res = solve(v0, lat, model, consts)
mean = extract_characteristic(res, x, t, "mean")
print(f"mean walk at s=0: {mean(0.0)[0]:.4f}; C0 distance to the line {mean.distance(line):.4f}")

ens = extract_characteristic(res, x, t, "ensemble", n=500, seed=1)
d = ens.distances(line)
print(f"500 walks: median distance {np.median(d):.3f}, 90th percentile {np.quantile(d, 0.9):.3f}")

rep = run_characteristic_study(cfg, x, t, eps=0.1, n_paths=500)
for dx, md, fr in zip(rep.dx, rep.mean_distance, rep.fraction_within):
    print(f"dx={dx:<6g} mean-path distance {md:.4f}  fraction within 0.1: {fr:.3f}")
