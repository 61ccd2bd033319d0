"""Hamiltonians, their Legendre transforms and the constants of the scheme.

A :class:`HamiltonianModel` bundles vectorised callables for ``H``, ``H_p``,
``H_pp`` and ``H_x``.  Every callable takes ``x`` of shape ``(..., d)``, a time
``t`` (scalar or broadcastable to ``(...)``) and ``p`` of shape ``(..., d)``.

The Lagrangian ``L(x, t, xi) = sup_p {p.xi - H(x, t, p)}`` is computed by a
damped Newton iteration on ``H_p(x, t, p) = xi``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConjugationError, ConstantsError, ModelEvaluationError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Extrema:
    """Closed-form extrema used in place of probing.

    ``sup_h_at_zero`` is ``sup H(x, t, 0)`` (so ``inf L = -sup_h_at_zero``),
    ``max_abs_l_at_zero`` is ``max |L(x, t, 0)|`` and ``max_abs_lxx`` bounds
    ``|L_{x^i x^j}|`` on the whole space.
    """

    sup_h_at_zero: float
    max_abs_l_at_zero: float
    max_abs_lxx: float


@dataclass(frozen=True)
class HamiltonianModel:
    dim: int
    eval: Callable
    grad_p: Callable
    hess_pp: Callable
    grad_x: Callable
    alpha: float
    hp_bound: Callable[[float], float]
    name: str = "user"
    x_independent: bool = False
    extrema: Optional[Extrema] = None
    # closed-form Lagrangian, used by the oracle and by tests only
    lagrangian: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


@dataclass(frozen=True)
class LagrangianValue:
    value: np.ndarray
    p_star: np.ndarray
    grad_x: np.ndarray
    grad_xi: np.ndarray


@dataclass(frozen=True)
class SchemeConstants:
    dim: int
    r: float
    R: float
    T: float
    h: float
    L_star: float
    alpha1: float
    alpha2: float
    lambda1: float
    theta: float
    deriv_bound: float
    source: str = "closed-form"

    @property
    def speed_bound(self) -> float:
        """``(d * lambda1)^{-1}``, the a priori bound on minimizing controls."""
        return 1.0 / (self.dim * self.lambda1)


@dataclass(frozen=True)
class ProbeSet:
    """Sampling lattice for user models without closed-form extrema."""

    x_lo: float = 0.0
    x_hi: float = 1.0
    nx: int = 64
    nt: int = 16
    nx_theta: int = 12
    nt_theta: int = 4
    n_xi: int = 5
    fd_step: float = 1e-5


# ---------------------------------------------------------------------------
# built-in models


def _sq(p):
    return 0.5 * np.sum(p * p, axis=-1)


def quadratic(dim: int = 1) -> HamiltonianModel:
    """``H = |p|^2 / 2``."""
    eye = np.eye(dim)
    return HamiltonianModel(
        dim=dim,
        eval=lambda x, t, p: _sq(np.asarray(p, float)),
        grad_p=lambda x, t, p: np.array(p, dtype=float, copy=True),
        hess_pp=lambda x, t, p: np.broadcast_to(eye, np.shape(p) + (dim,)).copy(),
        grad_x=lambda x, t, p: np.zeros(np.shape(p)),
        alpha=0.0,
        hp_bound=lambda radius: float(radius),
        name="quadratic",
        x_independent=True,
        extrema=Extrema(0.0, 0.0, 0.0),
        lagrangian=lambda x, t, xi: _sq(np.asarray(xi, float)),
    )


def quadratic_cosine(dim: int = 1) -> HamiltonianModel:
    """``H = |p|^2 / 2 + sum_j cos(2 pi x^j)``.

    ``|L_{x^j}| = 2 pi |sin(2 pi x^j)| <= 2 pi``, so ``alpha = 2 pi``.
    """
    eye = np.eye(dim)

    def potential(x):
        return np.sum(np.cos(TWO_PI * np.asarray(x, float)), axis=-1)

    def grad_x(x, t, p):
        g = -TWO_PI * np.sin(TWO_PI * np.asarray(x, float))
        return np.broadcast_to(g, np.broadcast_shapes(np.shape(g), np.shape(p))).copy()

    return HamiltonianModel(
        dim=dim,
        eval=lambda x, t, p: _sq(np.asarray(p, float)) + potential(x),
        grad_p=lambda x, t, p: np.array(p, dtype=float, copy=True),
        hess_pp=lambda x, t, p: np.broadcast_to(eye, np.shape(p) + (dim,)).copy(),
        grad_x=grad_x,
        alpha=TWO_PI,
        hp_bound=lambda radius: float(radius),
        name="quadratic+cosine",
        x_independent=False,
        extrema=Extrema(float(dim), float(dim), TWO_PI**2),
        lagrangian=lambda x, t, xi: _sq(np.asarray(xi, float)) - potential(x),
    )


def anisotropic_quadratic(dim: int = 1, a=None) -> HamiltonianModel:
    """``H = p^T A p / 2`` with ``A = diag(a)``, ``a > 0``."""
    a = np.arange(1.0, dim + 1.0) if a is None else np.asarray(a, float)
    if a.shape != (dim,) or np.any(a <= 0):
        raise ValueError("a must hold dim positive entries")
    A = np.diag(a)
    return HamiltonianModel(
        dim=dim,
        eval=lambda x, t, p: 0.5 * np.sum(a * np.asarray(p, float) ** 2, axis=-1),
        grad_p=lambda x, t, p: a * np.asarray(p, float),
        hess_pp=lambda x, t, p: np.broadcast_to(A, np.shape(p) + (dim,)).copy(),
        grad_x=lambda x, t, p: np.zeros(np.shape(p)),
        alpha=0.0,
        hp_bound=lambda radius: float(a.max() * radius),
        name="anisotropic-quadratic",
        x_independent=True,
        extrema=Extrema(0.0, 0.0, 0.0),
        lagrangian=lambda x, t, xi: 0.5 * np.sum(np.asarray(xi, float) ** 2 / a, axis=-1),
        params={"a": a.tolist()},
    )


_REGISTRY = {
    "quadratic": quadratic,
    "quadratic+cosine": quadratic_cosine,
    "anisotropic-quadratic": anisotropic_quadratic,
}


def get_model(name: str, dim: int = 1, **params) -> HamiltonianModel:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; known: {sorted(_REGISTRY)}") from None
    return factory(dim, **params)


def builtin_names():
    return sorted(_REGISTRY)


# ---------------------------------------------------------------------------
# evaluation


def eval_h(model: HamiltonianModel, x, t, p):
    """Evaluate ``H(x, t, p)``, raising if the result is not finite."""
    out = np.asarray(model.eval(np.asarray(x, float), t, np.asarray(p, float)), float)
    if not np.all(np.isfinite(out)):
        raise ModelEvaluationError(f"{model.name}: non-finite H at x={x!r}, t={t!r}, p={p!r}")
    return out if out.ndim else float(out)


def _flatten(model, x, t, xi):
    d = model.dim
    xi = np.asarray(xi, float)
    if xi.shape[-1:] != (d,):
        raise ValueError(f"xi must have trailing dimension {d}")
    batch = xi.shape[:-1]
    x = np.broadcast_to(np.asarray(x, float), batch + (d,)).reshape(-1, d)
    tt = np.broadcast_to(np.asarray(t, float), batch).reshape(-1)
    return x, tt, xi.reshape(-1, d), batch


def legendre(model: HamiltonianModel, x, t, xi, *, max_iter: int = 50) -> LagrangianValue:
    """Legendre transform of ``H(x, t, .)`` evaluated at ``xi``.

    Solves ``H_p(x, t, p) = xi`` by Newton's method started at ``p = 0``,
    damped with an Armijo line search on the convex objective
    ``H(x, t, p) - p.xi``.  Inputs broadcast over leading axes.

    Raises ConjugationError if the residual
    ``|H_p(p*) - xi|_inf <= 1e-12 (1 + |xi|_inf)`` is not reached.
    """
    X, tt, XI, batch = _flatten(model, x, t, xi)
    d = model.dim
    P = np.zeros_like(XI)
    tol = 1e-12 * (1.0 + np.abs(XI).max(axis=1))

    def objective(idx, p):
        return model.eval(X[idx], tt[idx], p) - np.sum(p * XI[idx], axis=1)

    res = None
    for _ in range(max_iter + 1):
        g = model.grad_p(X, tt, P) - XI
        res = np.abs(g).max(axis=1)
        active = np.nonzero(res > tol)[0]
        if active.size == 0:
            break
        ga = g[active]
        hess = np.asarray(model.hess_pp(X[active], tt[active], P[active]), float).reshape(-1, d, d)
        step = -np.linalg.solve(hess, ga[..., None])[..., 0]
        f0 = objective(active, P[active])
        slope = np.sum(ga * step, axis=1)
        s = np.ones(active.size)
        slack = 1e-14 * (1.0 + np.abs(f0))
        for _ in range(60):
            f1 = objective(active, P[active] + s[:, None] * step)
            ok = f1 <= f0 + 1e-4 * s * slope + slack
            if ok.all():
                break
            s = np.where(ok, s, 0.5 * s)
        P[active] += s[:, None] * step
    else:
        worst = float(res.max())
        raise ConjugationError(
            f"{model.name}: Legendre Newton did not converge (residual {worst:.3e})", residual=worst
        )
    if not np.all(np.isfinite(P)):
        raise ConjugationError(f"{model.name}: non-finite conjugate point", residual=float("nan"))

    value = np.sum(P * XI, axis=1) - model.eval(X, tt, P)
    gx = -np.asarray(model.grad_x(X, tt, P), float).reshape(-1, d)
    return LagrangianValue(
        value=value.reshape(batch),
        p_star=P.reshape(batch + (d,)),
        grad_x=gx.reshape(batch + (d,)),
        grad_xi=P.reshape(batch + (d,)).copy(),
    )


def biconjugate(model: HamiltonianModel, x, t, p, radius: float, n: int = 17, zooms: int = 14):
    """Numeric ``sup_xi {p.xi - L(x, t, xi)}`` by successive lattice zooms.

    The first lattice spans ``[-radius, radius]^d``; each zoom re-centres on
    the best lattice point and shrinks the window by ``(n - 1) / 4``.
    """
    d = model.dim
    p = np.atleast_2d(np.asarray(p, float))
    x = np.broadcast_to(np.asarray(x, float), p.shape)
    tt = np.broadcast_to(np.asarray(t, float), p.shape[:1])
    N = p.shape[0]
    ref = np.linspace(-1.0, 1.0, n)
    offsets = np.stack(np.meshgrid(*([ref] * d), indexing="ij"), axis=-1).reshape(-1, d)
    centre = np.zeros((N, d))
    width = float(radius)
    best = None
    for _ in range(zooms):
        cand = centre[:, None, :] + width * offsets[None]
        L = legendre(model, x[:, None, :], tt[:, None], cand).value
        score = np.sum(p[:, None, :] * cand, axis=-1) - L
        k = np.argmax(score, axis=1)
        best = score[np.arange(N), k]
        centre = cand[np.arange(N), k]
        width *= 4.0 / (n - 1)
    return best


# ---------------------------------------------------------------------------
# constants


def _probe_points(d, lo, hi, n, rng):
    if d <= 2:
        g = np.linspace(lo, hi, n)
        return np.stack(np.meshgrid(*([g] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return rng.uniform(lo, hi, size=(n * n, d))


def scheme_constants(model: HamiltonianModel, T: float, r: float, R: float, h: float = 0.0,
                     probe: Optional[ProbeSet] = None) -> SchemeConstants:
    """Constants ``L*, alpha1, alpha2, lambda1, theta`` governing the scheme.

    Built-in models use their closed-form extrema; other models are probed on
    ``probe`` and the result is labelled ``"sampled"``.
    """
    if not (T > 0 and r > 0 and R > 0):
        raise ValueError("T, r and R must be positive")
    d = model.dim
    ext = model.extrema
    if ext is not None and probe is None:
        inf_L = -ext.sup_h_at_zero
        max_L0 = ext.max_abs_l_at_zero
        source = "closed-form"
    else:
        probe = probe or ProbeSet()
        rng = np.random.default_rng(0)
        X = _probe_points(d, probe.x_lo, probe.x_hi, probe.nx, rng)
        ts = np.linspace(0.0, T, probe.nt)
        Xa = np.repeat(X, ts.size, axis=0)
        ta = np.tile(ts, X.shape[0])
        zero = np.zeros_like(Xa)
        H0 = np.asarray(model.eval(Xa, ta, zero), float)
        L0 = legendre(model, Xa, ta, zero).value
        if not (np.all(np.isfinite(H0)) and np.all(np.isfinite(L0))):
            raise ConstantsError(f"{model.name}: non-finite probe value (H4 violated?)")
        # inf over xi of L(x,t,.) is attained at xi = H_p(x,t,0) and equals -H(x,t,0)
        inf_L = -float(H0.max())
        max_L0 = float(np.abs(L0).max())
        source = "sampled"

    L_star = min(0.0, inf_L)
    alpha1 = T * max_L0 + R
    alpha2 = model.alpha * (alpha1 + R + (1.0 + 2.0 * abs(L_star)) * T)
    deriv_bound = 1.0 + r + alpha2
    hp = float(model.hp_bound(deriv_bound))
    if not np.isfinite(hp) or hp <= 0:
        raise ConstantsError(f"{model.name}: bad hp_bound({deriv_bound})")
    lambda1 = 1.0 / (d * hp)

    if ext is not None and source == "closed-form":
        theta = T * ext.max_abs_lxx
    else:
        theta = T * _sampled_lxx(model, probe, T, 1.0 / (d * lambda1))
    if not np.isfinite(theta):
        raise ConstantsError(f"{model.name}: non-finite theta")

    return SchemeConstants(dim=d, r=float(r), R=float(R), T=float(T), h=float(h),
                           L_star=L_star, alpha1=alpha1, alpha2=alpha2, lambda1=lambda1,
                           theta=theta, deriv_bound=deriv_bound, source=source)


def _sampled_lxx(model, probe, T, xi_max):
    d = model.dim
    rng = np.random.default_rng(1)
    X = _probe_points(d, probe.x_lo, probe.x_hi, probe.nx_theta, rng)
    g = np.linspace(-xi_max, xi_max, probe.n_xi)
    XI = np.stack(np.meshgrid(*([g] * d), indexing="ij"), axis=-1).reshape(-1, d)
    worst = 0.0
    eps = probe.fd_step
    for t in np.linspace(0.0, T, probe.nt_theta):
        xs = np.repeat(X, XI.shape[0], axis=0)
        xis = np.tile(XI, (X.shape[0], 1))
        for i in range(d):
            e = np.zeros(d)
            e[i] = eps
            up = legendre(model, xs + e, t, xis).grad_x
            dn = legendre(model, xs - e, t, xis).grad_x
            worst = max(worst, float(np.abs((up - dn) / (2 * eps)).max()))
    return worst
