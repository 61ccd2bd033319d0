"""Backward random walks driven by a control field.

A walk starts at an apex node ``n`` on level ``top`` and moves one lattice
step per level, choosing ``w in B`` at node ``m`` of level ``k`` with
probability ``rho(w) = 1/(2d) - (lam/2) w . xi^k_m``.  The expected action

    E(xi) = E[ sum_k L(x_{gamma^k}, t_{k-1}, xi^k_{gamma^k}) dt + v^0_{gamma^0} ] + h t_top

is computed by full path enumeration, by propagating node-occupancy
probabilities, or by Monte Carlo.

Positions are kept as unwrapped integer nodes; periodic wrap is applied only
when a layer value or a coordinate is looked up.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional

import numpy as np

from .errors import EnumerationTooLargeError, NegativeProbabilityError, OutOfConeError
from .hamiltonian import HamiltonianModel, legendre
from .lattice import Lattice, NodeIndex, directions, solution_parity
from .scheme import Layer, SolveResult

ENUM_CAP = 2**20
MC_BLOCK = 1024
ADMISSIBLE_RTOL = 1e-12


def transition_probs(xi, lam: float, d: Optional[int] = None) -> np.ndarray:
    """Probabilities of the ``2d`` steps, ordered ``+e_1, -e_1, +e_2, ...``.

    ``xi`` has shape ``(..., d)``; the result has shape ``(..., 2d)``.  ``lam``
    is a scalar or an array of the batch shape ``(...)``.
    """
    xi = np.asarray(xi, float)
    d = xi.shape[-1] if d is None else d
    lam = np.asarray(lam, float)
    if lam.ndim:
        lam = lam[..., None]  # one ratio per control
    bound = 1.0 / (d * lam)
    over = np.abs(xi) > bound * (1 + ADMISSIBLE_RTOL)
    if np.any(over):
        raise NegativeProbabilityError(
            f"|xi|_inf = {np.max(np.abs(xi)):.6g} exceeds (d lambda)^-1 = {np.min(bound):.6g}")
    half = 0.5 * lam * xi
    base = 1.0 / (2 * d)
    out = np.empty(xi.shape[:-1] + (2 * d,))
    out[..., 0::2] = base - half
    out[..., 1::2] = base + half
    # on a face of the box the vanishing probability comes out as +-1e-17
    out[np.abs(out) <= 1e-15 * base] = 0.0
    return np.clip(out, 0.0, 1.0)


def _box_nodes(centre, w: int) -> np.ndarray:
    centre = np.asarray(centre, dtype=np.int64)
    rng = np.arange(-w, w + 1)
    grids = np.meshgrid(*([rng] * centre.size), indexing="ij")
    return np.stack(grids, axis=-1) + centre


def _parity_mask(centre, w: int, par: int) -> np.ndarray:
    return np.mod(_box_nodes(centre, w).sum(axis=-1), 2) == par


@dataclass
class ControlField:
    """Velocity field ``xi^k_m`` on the dependence cone of ``apex``.

    ``xi[k]`` (for ``bottom < k <= top``) has shape ``(2w+1,)*d + (d,)`` with
    ``w = top - k``, centred on ``apex``.  Entries off the level's parity
    class are unused and held at zero.
    """

    apex: np.ndarray
    top: int
    bottom: int
    dx: float
    dt: float
    xi: Dict[int, np.ndarray]

    def __post_init__(self):
        self.apex = np.asarray(self.apex, dtype=np.int64)
        if self.bottom > self.top or self.bottom < 0:
            raise ValueError("need 0 <= bottom <= top")
        if int(self.apex.sum()) % 2 != solution_parity(self.top):
            raise ValueError(f"apex {tuple(self.apex)} is not a solution node of level {self.top}")
        bound = self.speed_bound
        for k in self.levels():
            a = self.xi[k]
            w = self.top - k
            if a.shape != (2 * w + 1,) * self.dim + (self.dim,):
                raise ValueError(f"control at level {k} has shape {a.shape}")
            if np.max(np.abs(a)) > bound * (1 + ADMISSIBLE_RTOL):
                raise NegativeProbabilityError(f"control at level {k} leaves the admissible box")

    @property
    def dim(self) -> int:
        return self.apex.size

    @property
    def lam(self) -> float:
        return self.dt / self.dx

    @property
    def speed_bound(self) -> float:
        return 1.0 / (self.dim * self.lam)

    @property
    def n_steps(self) -> int:
        return self.top - self.bottom

    def levels(self):
        return range(self.bottom + 1, self.top + 1)

    def index(self, k: int, pos) -> tuple:
        idx = np.asarray(pos, dtype=np.int64) - self.apex + (self.top - k)
        if np.any(idx < 0) or np.any(idx > 2 * (self.top - k)):
            raise OutOfConeError(f"position outside the control cone at level {k}")
        return tuple(idx.T)

    def at(self, k: int, pos) -> np.ndarray:
        return self.xi[k][self.index(k, np.atleast_2d(pos))]

    def nodes(self, k: int) -> np.ndarray:
        return _box_nodes(self.apex, self.top - k)

    def mask(self, k: int) -> np.ndarray:
        return _parity_mask(self.apex, self.top - k, solution_parity(k))

    def restrict(self, m, k: int) -> "ControlField":
        """The field seen by walks started at node ``m`` on level ``k``."""
        m = np.asarray(m, dtype=np.int64)
        if k > self.top or k < self.bottom:
            raise ValueError("restriction level outside the cone")
        off = m - self.apex
        if np.max(np.abs(off), initial=0) > self.top - k:
            raise OutOfConeError("restriction apex outside the cone")
        xi = {}
        for j in range(self.bottom + 1, k + 1):
            w_parent, w = self.top - j, k - j
            lo = off + w_parent - w
            sl = tuple(slice(a, a + 2 * w + 1) for a in lo)
            xi[j] = self.xi[j][sl].copy()
        return ControlField(m, k, self.bottom, self.dx, self.dt, xi)

    def truncate(self, bottom: int) -> "ControlField":
        """Same field with the walk stopped at level ``bottom``."""
        if not self.bottom <= bottom <= self.top:
            raise ValueError("bottom outside the cone")
        return ControlField(self.apex, self.top, bottom, self.dx, self.dt,
                            {k: self.xi[k] for k in range(bottom + 1, self.top + 1)})

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(self.xi[k]))) for k in self.levels()), default=0.0)

    # builders ------------------------------------------------------------

    @classmethod
    def from_function(cls, apex, top, dx, dt, fn: Callable, bottom: int = 0):
        """``fn(k, nodes)`` maps ``(N, d)`` integer nodes of level ``k`` to ``(N, d)`` controls."""
        apex = np.asarray(apex, dtype=np.int64)
        d = apex.size
        xi = {}
        for k in range(bottom + 1, top + 1):
            w = top - k
            M = _box_nodes(apex, w)
            mask = _parity_mask(apex, w, solution_parity(k))
            a = np.zeros(M.shape[:-1] + (d,))
            a[mask] = np.asarray(fn(k, M[mask]), float).reshape(-1, d)
            xi[k] = a
        return cls(apex, top, bottom, dx, dt, xi)

    @classmethod
    def constant(cls, apex, top, dx, dt, c, bottom: int = 0):
        d = np.asarray(apex).size
        c = np.broadcast_to(np.asarray(c, float), (d,))
        return cls.from_function(apex, top, dx, dt, lambda k, M: np.tile(c, (M.shape[0], 1)), bottom)

    @classmethod
    def random(cls, apex, top, dx, dt, seed=0, scale: float = 1.0, bottom: int = 0):
        """Independent uniform controls in ``scale`` times the admissible box."""
        rng = np.random.default_rng(seed)
        d = np.asarray(apex).size
        bound = scale * dx / (d * dt)
        return cls.from_function(apex, top, dx, dt,
                                 lambda k, M: rng.uniform(-bound, bound, size=M.shape), bottom)

    @classmethod
    def corner(cls, apex, top, dx, dt, axis: int = 0, sign: float = 1.0, bottom: int = 0):
        """``xi = sign (d lam)^-1 e_axis``: a face of the admissible box."""
        d = np.asarray(apex).size
        c = np.zeros(d)
        c[axis] = np.sign(sign) * dx / (d * dt)
        return cls.constant(apex, top, dx, dt, c, bottom)

    def perturbed(self, seed=0, amplitude: float = 0.1) -> "ControlField":
        """Random perturbation of relative size ``amplitude``, clipped to the admissible box."""
        rng = np.random.default_rng(seed)
        b = self.speed_bound
        xi = {k: np.clip(a + amplitude * b * rng.uniform(-1, 1, size=a.shape), -b, b)
              for k, a in self.xi.items()}
        return replace(self, xi=xi)


# ---------------------------------------------------------------------------
# control from a solve


def minimizing_control(result: SolveResult, apex: NodeIndex) -> ControlField:
    """``xi*^k_m = H_p(x_m, t_{k-1}, (D_x v)^{k-1}_m)`` on the cone below ``apex``."""
    lat = result.lattice
    m = np.asarray(apex.m, dtype=np.int64)
    top = apex.k
    if top > lat.horizon_steps:
        raise OutOfConeError("apex above the solved horizon")
    if int(m.sum()) % 2 != solution_parity(top):
        raise ValueError("apex must be a solution node of its level")
    d = lat.dim
    xi = {}
    for k in range(1, top + 1):
        w = top - k
        M = _box_nodes(m, w)
        mask = _parity_mask(m, w, solution_parity(k))
        pts = M[mask]
        grad = result.layer(k - 1).gradients_at(pts)
        a = np.zeros(M.shape[:-1] + (d,))
        a[mask] = result.model.grad_p(lat.coords(pts), lat.time(k - 1), grad)
        xi[k] = a
    return ControlField(m, top, 0, lat.dx, lat.dt, xi)


# ---------------------------------------------------------------------------
# per-level integrands


def running_grids(xi: ControlField, lat: Lattice, model: HamiltonianModel,
                  kind: str = "value", axis: int = 0) -> Dict[int, np.ndarray]:
    """``L`` (``kind="value"``) or ``L_{x^axis}`` (``kind="grad_x"``) on the cone, per level."""
    out = {}
    for k in xi.levels():
        X = lat.coords(xi.nodes(k))
        lv = legendre(model, X, lat.time(k - 1), xi.xi[k])
        out[k] = lv.value if kind == "value" else lv.grad_x[..., axis]
    return out


def _rho_grids(xi: ControlField):
    return {k: transition_probs(xi.xi[k], xi.lam, xi.dim) for k in xi.levels()}


def layer_terminal(layer: Layer, shift=None, gradient_axis: Optional[int] = None):
    """Terminal functional reading ``layer`` values (or one gradient component) at ``pos + shift``."""
    def f(pos):
        p = pos if shift is None else pos + np.asarray(shift, dtype=np.int64)
        if gradient_axis is None:
            return layer.values_at(p)
        return layer.gradients_at(p)[:, gradient_axis]
    return f


# ---------------------------------------------------------------------------
# exact enumeration


def _check_cap(xi: ControlField, cap: int):
    count = (2 * xi.dim) ** xi.n_steps
    if count > cap:
        raise EnumerationTooLargeError(
            f"{count} paths exceed the enumeration cap {cap}; use Monte Carlo or occupancy propagation")


def _enumerate_functional(xi: ControlField, running, terminal, cap: int) -> float:
    _check_cap(xi, cap)
    B = directions(xi.dim)
    rho = _rho_grids(xi)
    pos = xi.apex[None].copy()
    dens = np.ones(1)
    acc = np.zeros(1)
    for k in range(xi.top, xi.bottom, -1):
        idx = xi.index(k, pos)
        if running is not None:
            acc = acc + running[k][idx] * xi.dt
        r = rho[k][idx]
        pos = (pos[:, None, :] + B[None]).reshape(-1, xi.dim)
        dens = (dens[:, None] * r).reshape(-1)
        acc = np.repeat(acc, 2 * xi.dim)
    keep = dens > 0
    return float(np.dot(dens[keep], acc[keep] + terminal(pos[keep])))


def expected_action_exact(xi: ControlField, init_layer: Layer, lat: Lattice, model: HamiltonianModel,
                          h: float = 0.0, cap: int = ENUM_CAP) -> float:
    """Expected action by summing over all ``(2d)^(top-bottom)`` paths."""
    if init_layer.level != xi.bottom:
        raise ValueError("terminal layer must sit on the bottom level of the control cone")
    run = running_grids(xi, lat, model)
    return _enumerate_functional(xi, run, layer_terminal(init_layer), cap) + h * xi.n_steps * xi.dt


def enumerate_paths(xi: ControlField, cap: int = ENUM_CAP) -> "WalkEnsemble":
    """All paths with their densities and eta-paths."""
    _check_cap(xi, cap)
    d = xi.dim
    B = directions(d)
    rho = _rho_grids(xi)
    gam = xi.apex[None, None, :].astype(np.int32)
    eta = (xi.apex * xi.dx)[None, None, :].astype(float)
    dens = np.ones(1)
    for k in range(xi.top, xi.bottom, -1):
        pos = gam[:, -1, :].astype(np.int64)
        idx = xi.index(k, pos)
        r = rho[k][idx]
        e_new = eta[:, -1, :] - xi.xi[k][idx] * xi.dt
        nxt = (pos[:, None, :] + B[None]).reshape(-1, d)
        gam = np.concatenate([np.repeat(gam, 2 * d, axis=0), nxt[:, None, :].astype(np.int32)], axis=1)
        eta = np.concatenate([np.repeat(eta, 2 * d, axis=0),
                              np.repeat(e_new, 2 * d, axis=0)[:, None, :]], axis=1)
        dens = (dens[:, None] * r).reshape(-1)
    # stored by ascending level
    return WalkEnsemble(xi.apex.copy(), xi.top, xi.bottom, xi.dx, xi.dt,
                        gam[:, ::-1, :].copy(), eta[:, ::-1, :].copy(), dens, True, None)


# ---------------------------------------------------------------------------
# Monte Carlo


def _uniforms(seed: int, n: int, steps: int, block: int = MC_BLOCK) -> np.ndarray:
    """Row ``i`` depends only on ``(seed, i)``: path ``i`` draws from the stream of its block."""
    U = np.empty((n, steps))
    for b in range(math.ceil(n / block)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        u = rng.random((block, steps))
        lo = b * block
        U[lo:lo + block] = u[:min(block, n - lo)]
    return U


def sample_paths(xi: ControlField, n: int, seed: int = 0) -> "WalkEnsemble":
    """``n`` independent walks drawn level by level from ``rho``."""
    if n < 1:
        raise ValueError("need at least one path")
    d = xi.dim
    B = directions(d)
    rho = _rho_grids(xi)
    K = xi.n_steps
    U = _uniforms(seed, n, K)
    gam = np.empty((n, K + 1, d), dtype=np.int32)
    eta = np.empty((n, K + 1, d))
    pos = np.tile(xi.apex, (n, 1))
    e = np.tile(xi.apex * xi.dx, (n, 1)).astype(float)
    gam[:, K] = pos
    eta[:, K] = e
    for s, k in enumerate(range(xi.top, xi.bottom, -1)):
        idx = xi.index(k, pos)
        cum = np.cumsum(rho[k][idx], axis=1)
        choice = np.sum(cum[:, :-1] <= U[:, s, None], axis=1)
        e = e - xi.xi[k][idx] * xi.dt
        pos = pos + B[choice]
        gam[:, k - 1 - xi.bottom] = pos
        eta[:, k - 1 - xi.bottom] = e
    return WalkEnsemble(xi.apex.copy(), xi.top, xi.bottom, xi.dx, xi.dt, gam, eta,
                        np.full(n, 1.0 / n), False, seed)


def _path_values(ens: "WalkEnsemble", xi: ControlField, running, terminal) -> np.ndarray:
    acc = np.zeros(ens.n_paths)
    if running is not None:
        for k in xi.levels():
            acc += running[k][xi.index(k, ens.gamma[:, k - ens.bottom].astype(np.int64))] * xi.dt
    return acc + terminal(ens.gamma[:, 0].astype(np.int64))


def _mean_stderr(vals):
    n = vals.size
    if np.all(vals == vals[0]):
        return float(vals[0]), 0.0
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(n))


def expected_action_mc(xi: ControlField, init_layer: Layer, lat: Lattice, model: HamiltonianModel,
                       h: float = 0.0, n_samples: int = 10_000, seed: int = 0):
    """Monte Carlo estimate of the expected action; returns ``(estimate, stderr)``."""
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if init_layer.level != xi.bottom:
        raise ValueError("terminal layer must sit on the bottom level of the control cone")
    ens = sample_paths(xi, n_samples, seed)
    vals = _path_values(ens, xi, running_grids(xi, lat, model), layer_terminal(init_layer))
    est, se = _mean_stderr(vals)
    return est + h * xi.n_steps * xi.dt, se


# ---------------------------------------------------------------------------
# occupancy propagation (exact for linear functionals of the path)


def occupancies(xi: ControlField) -> Dict[int, np.ndarray]:
    """Probability of visiting each node of the cone, per level."""
    d = xi.dim
    B = directions(d)
    rho = _rho_grids(xi)
    occ = {xi.top: np.ones((1,) * d)}
    cur = occ[xi.top]
    for k in range(xi.top, xi.bottom, -1):
        w = xi.top - k
        nxt = np.zeros((2 * w + 3,) * d)
        for b, om in enumerate(B):
            sl = tuple(slice(1 + o, 2 + o + 2 * w) for o in om)
            nxt[sl] += cur * rho[k][..., b]
        occ[k - 1] = nxt
        cur = nxt
    return occ


def expected_functional_occupancy(xi: ControlField, running, terminal) -> float:
    """``E[sum_k running_k(gamma^k) dt + terminal(gamma^bottom)]`` via occupancies."""
    occ = occupancies(xi)
    total = 0.0
    if running is not None:
        for k in xi.levels():
            mask = xi.mask(k)
            total += float(np.sum(occ[k][mask] * running[k][mask])) * xi.dt
    w = xi.n_steps
    mask = _parity_mask(xi.apex, w, solution_parity(xi.bottom))
    nodes = _box_nodes(xi.apex, w)[mask]
    p = occ[xi.bottom][mask]
    keep = p > 0
    total += float(np.dot(p[keep], terminal(nodes[keep])))
    return total


def expected_action_occupancy(xi: ControlField, init_layer: Layer, lat: Lattice,
                              model: HamiltonianModel, h: float = 0.0) -> float:
    """Expected action computed exactly without enumerating paths."""
    if init_layer.level != xi.bottom:
        raise ValueError("terminal layer must sit on the bottom level of the control cone")
    run = running_grids(xi, lat, model)
    return expected_functional_occupancy(xi, run, layer_terminal(init_layer)) + h * xi.n_steps * xi.dt


def averaged_path(xi: ControlField) -> np.ndarray:
    """``gamma_bar^k`` for ``k = bottom .. top`` (rows in ascending level).

    ``gamma_bar^top = x_apex`` and ``gamma_bar^{k-1} = gamma_bar^k - xi_bar^k dt``
    with ``xi_bar^k`` the occupancy-weighted mean control on level ``k``.
    """
    occ = occupancies(xi)
    out = np.empty((xi.n_steps + 1, xi.dim))
    g = xi.apex * xi.dx
    out[-1] = g
    for k in range(xi.top, xi.bottom, -1):
        xbar = np.tensordot(occ[k], xi.xi[k], axes=xi.dim)
        g = g - xbar * xi.dt
        out[k - 1 - xi.bottom] = g
    return out


def mean_position(xi: ControlField) -> np.ndarray:
    """``E[gamma^k]`` (physical) per level from occupancies, ascending level."""
    occ = occupancies(xi)
    out = np.empty((xi.n_steps + 1, xi.dim))
    for k in range(xi.bottom, xi.top + 1):
        X = _box_nodes(xi.apex, xi.top - k) * xi.dx
        out[k - xi.bottom] = np.tensordot(occ[k], X, axes=xi.dim)
    return out


def sigma_tilde_exact(xi: ControlField) -> np.ndarray:
    """``E[|(eta^k - gamma^k)^i|^2]`` per level (ascending) and axis.

    The gap ``eta - gamma`` is a martingale along the backward walk, so each
    step adds ``dx^2 (1/d - (lam xi^i)^2)`` averaged over the occupancy.
    """
    occ = occupancies(xi)
    d = xi.dim
    out = np.zeros((xi.n_steps + 1, d))
    s = np.zeros(d)
    for k in range(xi.top, xi.bottom, -1):
        inc = 1.0 / d - (xi.lam * xi.xi[k]) ** 2
        s = s + xi.dx**2 * np.tensordot(occ[k], inc, axes=d)
        out[k - 1 - xi.bottom] = s
    return out


def dp_identity_check(xi: ControlField, split_level: int, init_layer: Layer, lat: Lattice,
                      model: HamiltonianModel, h: float = 0.0, cap: int = ENUM_CAP) -> float:
    """``|E(xi) - split form at split_level|``, both sides by enumeration."""
    if not xi.bottom <= split_level <= xi.top:
        raise ValueError("split level outside the cone")
    lhs = expected_action_exact(xi, init_layer, lat, model, h, cap)
    w = xi.top - split_level
    M = _box_nodes(xi.apex, w)
    mask = _parity_mask(xi.apex, w, solution_parity(split_level))
    inner = np.full(M.shape[:-1], np.nan)
    for idx in zip(*np.nonzero(mask)):
        m = M[idx]
        if split_level == xi.bottom:
            inner[idx] = init_layer.value(m)
        else:
            inner[idx] = expected_action_exact(xi.restrict(m, split_level), init_layer, lat, model, h, cap)
    upper = xi.truncate(split_level)

    def terminal(pos):
        return inner[upper.index(split_level, pos)]

    run = running_grids(upper, lat, model)
    rhs = _enumerate_functional(upper, run, terminal, cap) + h * upper.n_steps * xi.dt
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# ensembles and statistics


@dataclass
class WalkEnsemble:
    """Paths stored by ascending level: ``gamma[:, k - bottom]`` is the node at level ``k``."""

    apex: np.ndarray
    top: int
    bottom: int
    dx: float
    dt: float
    gamma: np.ndarray
    eta: np.ndarray
    weights: np.ndarray
    exact: bool
    seed: Optional[int]

    @property
    def n_paths(self) -> int:
        return self.gamma.shape[0]

    @property
    def dim(self) -> int:
        return self.gamma.shape[2]

    @property
    def lam(self) -> float:
        return self.dt / self.dx

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.bottom, self.top + 1)

    @property
    def times(self) -> np.ndarray:
        return self.levels * self.dt

    def positions(self) -> np.ndarray:
        return self.gamma * self.dx

    def mean_path(self) -> np.ndarray:
        return np.tensordot(self.weights, self.positions(), axes=1)


@dataclass
class WalkStats:
    levels: np.ndarray
    sigma_tilde: np.ndarray
    delta_tilde: np.ndarray
    bound: np.ndarray
    sigma_se: np.ndarray
    delta_se: np.ndarray
    exact: bool

    def holds(self, n_se: float = 4.0, atol: float = 1e-15) -> bool:
        """Both inequalities, with an ``n_se`` standard-error allowance for sampled ensembles."""
        s_ok = np.all(self.sigma_tilde - n_se * self.sigma_se <= self.bound[:, None] + atol)
        d_ok = np.all(np.maximum(self.delta_tilde - n_se * self.delta_se, 0.0) ** 2
                      <= self.sigma_tilde + n_se * self.sigma_se + atol)
        return bool(s_ok and d_ok)


def walk_stats(ens: WalkEnsemble) -> WalkStats:
    gap = ens.eta - ens.positions()
    w = ens.weights
    sq, ab = gap**2, np.abs(gap)
    sigma = np.tensordot(w, sq, axes=1)
    delta = np.tensordot(w, ab, axes=1)
    if ens.exact:
        zero = np.zeros_like(sigma)
        s_se, d_se = zero, zero.copy()
    else:
        n = ens.n_paths
        s_se = sq.std(axis=0, ddof=1) / math.sqrt(n)
        d_se = ab.std(axis=0, ddof=1) / math.sqrt(n)
    bound = (ens.top - ens.levels) * ens.dt * ens.dx / ens.lam
    return WalkStats(ens.levels, sigma, delta, bound, s_se, d_se, ens.exact)


def write_ensemble_csv(ens: WalkEnsemble, path) -> None:
    d = ens.dim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["path_id", "k"] + [f"gamma{i + 1}" for i in range(d)]
                   + [f"eta{i + 1}" for i in range(d)] + ["density"])
        X = ens.positions()
        for p in range(ens.n_paths):
            for j, k in enumerate(ens.levels):
                w.writerow([p, int(k)] + [repr(float(v)) for v in X[p, j]]
                           + [repr(float(v)) for v in ens.eta[p, j]] + [repr(float(ens.weights[p]))])


def write_stats_csv(stats: WalkStats, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "axis", "sigma_tilde", "delta_tilde", "bound"])
        for j, k in enumerate(stats.levels):
            for i in range(stats.sigma_tilde.shape[1]):
                w.writerow([int(k), i + 1, repr(float(stats.sigma_tilde[j, i])),
                            repr(float(stats.delta_tilde[j, i])), repr(float(stats.bound[j]))])
