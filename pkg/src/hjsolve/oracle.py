"""Reference solutions independent of the scheme.

For ``H`` independent of ``(x, t)`` minimizing curves are straight lines and

    v(x, t) = min_y { t L((x - y) / t) + v0(y) } + h t,

a finite-dimensional problem solved here by multi-start compass search.
``one_step_min`` minimizes the one-step expected action directly over the
admissible box, without going through ``H``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AmbiguousCharacteristicError, UnsupportedOracleError
from .hamiltonian import HamiltonianModel, legendre
from .characteristics import PiecewisePath
from .walks import transition_probs

VALUE_TIE = 1e-9
GRAD_TIE = 1e-6


@dataclass
class OracleEntry:
    x: np.ndarray
    t: float
    value: float
    gradient: np.ndarray
    minimizer: np.ndarray
    regular: bool
    minimizers: np.ndarray


def _lagrangian(model: HamiltonianModel):
    if model.lagrangian is not None:
        return lambda xi: np.asarray(model.lagrangian(None, 0.0, xi), float)
    d = model.dim
    return lambda xi: legendre(model, np.zeros(d), 0.0, xi).value


def _require_free(model):
    if not model.x_independent:
        raise UnsupportedOracleError(
            f"{model.name}: the Hopf-Lax oracle needs H independent of (x, t)")


@dataclass
class OracleBatch:
    value: np.ndarray
    gradient: np.ndarray
    minimizer: np.ndarray
    regular: np.ndarray


def hopf_lax_batch(model: HamiltonianModel, v0, X, t: float, h: float = 0.0,
                   speed: Optional[float] = None, hint=None) -> OracleBatch:
    """Oracle values, gradients, minimizers and regularity flags for every row of ``X``.

    ``speed`` bounds ``|x - y| / t`` for the search window (default
    ``hp_bound(1 + lip(v0))``); ``hint`` is an optional extra start per point.
    """
    val, grad, ymin, regular, _ = _hopf_lax(model, v0, X, t, h, speed, hint)
    return OracleBatch(val, grad, ymin, regular)


def _hopf_lax(model, v0, X, t, h, speed, hint):
    _require_free(model)
    X = np.atleast_2d(np.asarray(X, float))
    N, d = X.shape
    if t <= 0:
        raise ValueError("the oracle needs t > 0")
    if speed is None:
        speed = float(model.hp_bound(1.0 + getattr(v0, "lip", 1.0)))
    L = _lagrangian(model)
    half = t * speed
    ref = np.stack(np.meshgrid(*([np.array([-1.0, 0.0, 1.0])] * d), indexing="ij"), -1).reshape(-1, d)
    starts = [X[:, None, :] + half * ref[None]]
    if hint is not None:
        starts.append(np.asarray(hint, float).reshape(N, 1, d))
    S = np.concatenate(starts, axis=1)
    ns = S.shape[1]
    Xr = np.repeat(X, ns, axis=0)

    def f(Yc, rows):
        return t * L((Xr[rows] - Yc) / t) + v0(Yc)

    Y = S.reshape(-1, d).copy()
    Y, F = _compass(f, Y, max(half, 1e-3 * t) / 2, 1e-12)
    Y = Y.reshape(N, ns, d)
    F = F.reshape(N, ns)
    best = np.argmin(F, axis=1)
    val = F[np.arange(N), best]
    ymin = Y[np.arange(N), best]
    xi = (X[:, None, :] - Y) / t
    P = legendre(model, np.zeros(d), 0.0, xi).p_star
    grad = P[np.arange(N), best]
    tie = F <= val[:, None] + VALUE_TIE
    spread = np.where(tie[..., None], np.abs(P - grad[:, None, :]), 0.0).max(axis=(1, 2))
    regular = spread <= GRAD_TIE
    return val + h * t, grad, ymin, regular, (Y, F, P, tie)


def _compass(f, Y, step, tol, max_iter=20_000):
    """Vectorised compass search; ``f(Y_sub, rows)`` evaluates the objective of the given rows."""
    n, d = Y.shape
    rows = np.arange(n)
    F = f(Y, rows)
    step = np.full(n, float(step))
    for _ in range(max_iter):
        act = np.nonzero(step > tol)[0]
        if act.size == 0:
            break
        improved = np.zeros(n, bool)
        for i in range(d):
            for sgn in (1.0, -1.0):
                cand = Y[act].copy()
                cand[:, i] += sgn * step[act]
                Fc = f(cand, rows[act])
                better = Fc < F[act]
                sel = act[better]
                Y[sel] = cand[better]
                F[sel] = Fc[better]
                improved[sel] = True
        step[act] = np.where(improved[act], step[act] * 2.0, step[act] * 0.5)
    return Y, F


def hopf_lax(model: HamiltonianModel, v0, x, t: float, h: float = 0.0,
             speed: Optional[float] = None) -> OracleEntry:
    """Single-point oracle entry, with every distinct near-optimal minimizer recorded."""
    x = np.asarray(x, float).reshape(1, -1)
    val, grad, ymin, regular, (Y, F, P, tie) = _hopf_lax(model, v0, x, t, h, speed, None)
    mins = Y[0][tie[0]]
    # collapse duplicates found from several starts
    uniq = []
    for y in mins:
        if not any(np.max(np.abs(y - u)) <= 1e-6 for u in uniq):
            uniq.append(y)
    return OracleEntry(x[0], float(t), float(val[0]), grad[0], ymin[0], bool(regular[0]), np.array(uniq))


def one_step_min(x_m, t_k: float, neighbours, model: HamiltonianModel, dx: float, dt: float,
                 h: float = 0.0, max_iter: int = 100):
    """Minimize ``L(x_m, t_k, xi) dt + sum_w rho(w, xi) v_{m+w} + h dt`` over the admissible box.

    ``neighbours`` holds the ``2d`` values ordered ``+e_1, -e_1, +e_2, ...``.
    Projected Newton from ``xi = 0`` with Armijo backtracking; returns
    ``(value, argmin)``.
    """
    x_m = np.asarray(x_m, float)
    v = np.asarray(neighbours, float)
    d = x_m.size
    lam = dt / dx
    b = 1.0 / (d * lam)
    vp, vm = v[0::2], v[1::2]

    def F(xi):
        return (float(legendre(model, x_m, t_k, xi).value) * dt
                + float(transition_probs(xi, lam, d) @ v) + h * dt)

    xi = np.zeros(d)
    Fx = F(xi)
    for _ in range(max_iter):
        lv = legendre(model, x_m, t_k, xi)
        g = dt * lv.p_star - 0.5 * lam * (vp - vm)
        Hpp = np.asarray(model.hess_pp(x_m, t_k, lv.p_star), float).reshape(d, d)
        direction = -Hpp @ g / dt
        # freeze coordinates pushing against an active bound
        at_lo = (xi <= -b) & (direction < 0)
        at_hi = (xi >= b) & (direction > 0)
        direction[at_lo | at_hi] = 0.0
        if np.max(np.abs(direction), initial=0.0) <= 1e-15 * (1 + b):
            break
        s = 1.0
        while True:
            cand = np.clip(xi + s * direction, -b, b)
            Fc = F(cand)
            if Fc <= Fx + 1e-16 * (1 + abs(Fx)) or s < 1e-12:
                break
            s *= 0.5
        if np.max(np.abs(cand - xi)) <= 1e-15 * (1 + b):
            xi = cand
            Fx = min(Fx, Fc)
            break
        xi, Fx = cand, Fc
    return Fx, xi


def exact_characteristic(model: HamiltonianModel, x, t: float, entry: OracleEntry) -> PiecewisePath:
    """Straight segment from the Hopf-Lax minimizer at time 0 to ``(x, t)``."""
    _require_free(model)
    if not entry.regular:
        raise AmbiguousCharacteristicError(
            f"({x}, {t}) is not regular: {len(entry.minimizers)} minimizers", entry.minimizers)
    return PiecewisePath(np.array([0.0, t]), np.vstack([entry.minimizer, np.ravel(x)]))
