"""Refinement study: sup-norm error against the Hopf-Lax formula.

The error of a monotone scheme is O(sqrt(dx)) in general; for this
semiconcave example the observed order is close to 1.
"""
from hjsolve.harness import Config, run_convergence, run_gradient_l1

cfg = Config.from_dict({"model": {"name": "quadratic"}, "v0": {"name": "neg_abs"},
                        "T": 0.5, "dx": [0.04, 0.02, 0.01, 0.005], "K": [-1.5, 1.5]})
rep = run_convergence(cfg)
for row in rep.rows:
    print(f"dx={row['dx']:<7g} sup error {row['sup_error']:.3e}")
print(f"least-squares rate {rep.rate:.3f}; max err/sqrt(dx) = {rep.beta_hat:.3f}")

# Derivatives converge in L1 even across the kink.
l1 = run_gradient_l1(Config.from_dict({**cfg.to_dict(), "init_mode": "cell_average"}))
print("gradient L1 errors:", ", ".join(f"{e:.3e}" for e in l1.total()))

# Affine data is reproduced to rounding, so no rate is fitted.
aff = run_convergence(Config.from_dict({"v0": {"name": "affine", "params": {"a": [0.3]}}, "dx": [0.04, 0.02]}))
print("affine data exact:", aff.exact)
