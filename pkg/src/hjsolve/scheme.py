"""Staggered Lax-Friedrichs recursion for ``v_t + H(x, t, v_x) = h``.

One step reads

    v^{k+1}_m = (1/2d) sum_{w in B} v^k_{m+w} - dt H(x_m, t_k, (D_x v)^k_m) + h dt

with the central difference ``(D_x v)^k_m = (v^k_{m+e_j} - v^k_{m-e_j}) / (2 dx)``.
Layers are dense arrays over an index box; entries off the level's parity
class hold NaN.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .errors import (ConfigurationError, InputError, OutOfConeError, OutOfDomainError,
                     StabilityError)
from .hamiltonian import HamiltonianModel, SchemeConstants
from .lattice import Lattice, NodeIndex, gradient_parity, solution_parity

GRAD_SLACK = 1e-8


@dataclass
class Layer:
    level: int
    lo: np.ndarray
    values: np.ndarray
    dx: float
    period: Optional[np.ndarray] = None
    grad: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def periodic(self) -> bool:
        return self.period is not None

    def _index(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=np.int64))
        if self.periodic:
            pts = np.mod(pts, self.period)
        idx = pts - self.lo
        if np.any(idx < 0) or np.any(idx >= np.array(self.values.shape)):
            raise OutOfConeError(f"node outside the stored box at level {self.level}")
        return tuple(idx.T)

    def values_at(self, pts) -> np.ndarray:
        """Stored values at integer nodes ``pts`` of shape ``(N, d)``."""
        out = self.values[self._index(pts)]
        if np.any(np.isnan(out)):
            raise OutOfConeError(f"no value stored at some requested node of level {self.level}")
        return out

    def value(self, m) -> float:
        return float(self.values_at(np.asarray(m)[None])[0])

    def ensure_grad(self) -> np.ndarray:
        if self.grad is None:
            self.grad = central_gradient(self.values, self.dx, self.periodic)
        return self.grad

    def gradients_at(self, pts) -> np.ndarray:
        out = self.ensure_grad()[self._index(pts)]
        if np.any(np.isnan(out)):
            raise OutOfConeError(f"gradient unavailable at some requested node of level {self.level}")
        return out

    def gradient(self, m) -> np.ndarray:
        return self.gradients_at(np.asarray(m)[None])[0]

    def index_grid(self) -> np.ndarray:
        axes = [np.arange(lo, lo + n) for lo, n in zip(self.lo, self.values.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def nodes(self):
        """``(m, v)`` arrays for every node carrying a value."""
        grid = self.index_grid()
        mask = ~np.isnan(self.values)
        return grid[mask], self.values[mask]


@dataclass
class SolveResult:
    layers: Dict[int, Layer]
    lattice: Lattice
    constants: SchemeConstants
    model: HamiltonianModel
    max_grad: List[float]
    init_mode: str = "pointwise"

    def layer(self, k: int) -> Layer:
        try:
            return self.layers[k]
        except KeyError:
            raise OutOfDomainError(f"level {k} was not kept by solve()") from None

    @property
    def final(self) -> Layer:
        return self.layers[max(self.layers)]


@dataclass(frozen=True)
class CFLReport:
    passed: bool
    lam: float
    lambda1: float
    margin: float
    theta_ok: bool


# ---------------------------------------------------------------------------


def _shift(V, axis, s, periodic):
    """``W[m] = V[m + s e_axis]``; NaN-padded unless periodic."""
    if periodic:
        return np.roll(V, -s, axis=axis)
    W = np.full_like(V, np.nan)
    src = [slice(None)] * V.ndim
    dst = [slice(None)] * V.ndim
    if s > 0:
        src[axis], dst[axis] = slice(s, None), slice(None, -s)
    else:
        src[axis], dst[axis] = slice(None, s), slice(-s, None)
    W[tuple(dst)] = V[tuple(src)]
    return W


def central_gradient(V, dx, periodic):
    d = V.ndim
    out = np.empty(V.shape + (d,))
    for j in range(d):
        out[..., j] = (_shift(V, j, 1, periodic) - _shift(V, j, -1, periodic)) / (2 * dx)
    return out


def neighbour_sum(V, periodic):
    total = np.zeros_like(V)
    for j in range(V.ndim):
        total += _shift(V, j, 1, periodic)
        total += _shift(V, j, -1, periodic)
    return total


def _parity_mask(lo, shape, par):
    axes = [np.arange(a, a + n) for a, n in zip(lo, shape)]
    s = sum(np.meshgrid(*axes, indexing="ij"))
    return np.mod(s, 2) == par


def _coords(lat: Lattice, lo, shape):
    axes = [(np.arange(a, a + n)) * lat.dx for a, n in zip(lo, shape)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


# ---------------------------------------------------------------------------


def discretize_initial(v0, lat: Lattice, mode: str = "pointwise", s: int = 8,
                       r: Optional[float] = None, R: Optional[float] = None) -> Layer:
    """Initial layer on the odd nodes: point values or box averages over ``[-dx, dx]^d``.

    Box averages use the composite midpoint rule with ``s`` cells per axis.
    ``r``/``R`` trigger warning-only sanity checks of the Lipschitz and sup
    bounds.
    """
    if mode not in ("pointwise", "cell_average"):
        raise ValueError(f"unknown initial-data mode {mode!r}")
    lo, shape = lat.box(0)
    mask = _parity_mask(lo, shape, solution_parity(0))
    X = _coords(lat, lo, shape)[mask]
    d = lat.dim
    if mode == "pointwise":
        vals = np.asarray(v0(X), float)
    else:
        mid = ((np.arange(s) + 0.5) / s * 2.0 - 1.0) * lat.dx
        off = np.stack(np.meshgrid(*([mid] * d), indexing="ij"), axis=-1).reshape(-1, d)
        vals = np.empty(X.shape[0])
        chunk = max(1, 2_000_000 // off.shape[0])
        for a in range(0, X.shape[0], chunk):
            pts = X[a:a + chunk, None, :] + off[None]
            vals[a:a + chunk] = np.asarray(v0(pts.reshape(-1, d)), float).reshape(pts.shape[:2]).mean(axis=1)
    if not np.all(np.isfinite(vals)):
        raise InputError("initial data produced non-finite values")
    V = np.full(shape, np.nan)
    V[mask] = vals
    layer = Layer(0, lo, V, lat.dx, lat.period)
    if R is not None and np.nanmax(np.abs(V)) > R * (1 + 1e-12):
        warnings.warn(f"|v0| exceeds R={R} on the lattice", stacklevel=2)
    if r is not None:
        g = layer.ensure_grad()
        if np.nanmax(np.abs(g), initial=0.0) > r * (1 + 1e-9):
            warnings.warn(f"discrete gradient of v0 exceeds r={r}", stacklevel=2)
    return layer


def discrete_gradient(layer: Layer, lat: Lattice, m) -> np.ndarray:
    """Central difference vector at a gradient node of ``layer``."""
    m = np.asarray(m.m if isinstance(m, NodeIndex) else m, dtype=np.int64)
    if int(m.sum()) % 2 != gradient_parity(layer.level):
        raise ValueError("gradient nodes have the parity complementary to the layer values")
    return layer.gradient(m)


def check_cfl(consts: SchemeConstants, lat: Lattice) -> CFLReport:
    lam = lat.lam
    return CFLReport(passed=lam < consts.lambda1, lam=lam, lambda1=consts.lambda1,
                     margin=consts.lambda1 - lam, theta_ok=lat.dx * consts.theta <= 1.0)


def _require_cfl(consts, lat):
    rep = check_cfl(consts, lat)
    if not rep.passed:
        raise ConfigurationError(f"CFL violated: lambda={rep.lam:.6g} >= lambda1={rep.lambda1:.6g}")
    if not rep.theta_ok:
        warnings.warn(f"dx * theta = {lat.dx * consts.theta:.3g} > 1", stacklevel=3)


def step(layer_k: Layer, lat: Lattice, model: HamiltonianModel, consts: SchemeConstants,
         *, check: bool = True) -> Layer:
    """Advance one level.  Raises StabilityError if ``|D_x v|_inf`` exceeds the a priori bound."""
    if check:
        _require_cfl(consts, lat)
    k = layer_k.level
    V = layer_k.values
    periodic = layer_k.periodic
    G = layer_k.ensure_grad()
    mask = _parity_mask(layer_k.lo, V.shape, gradient_parity(k)) & ~np.isnan(G).any(axis=-1)
    g = G[mask]
    gmax = np.abs(g).max(axis=1) if g.size else np.zeros(0)
    if gmax.size and gmax.max() > consts.deriv_bound + GRAD_SLACK:
        i = int(np.argmax(gmax))
        node = tuple(int(v) for v in (layer_k.index_grid()[mask][i]))
        raise StabilityError(
            f"|D_x v|_inf = {gmax[i]:.6g} exceeds bound {consts.deriv_bound:.6g} at node {node}, level {k}",
            node=NodeIndex(node, k), value=float(gmax[i]))
    X = _coords(lat, layer_k.lo, V.shape)[mask]
    Hv = np.asarray(model.eval(X, lat.time(k), g), float)
    if not np.all(np.isfinite(Hv)):
        raise StabilityError(f"non-finite Hamiltonian at level {k}")
    avg = neighbour_sum(V, periodic)[mask] / (2 * lat.dim)
    new = np.full(V.shape, np.nan)
    new[mask] = avg - lat.dt * Hv + consts.h * lat.dt
    lo = layer_k.lo
    if not periodic:
        inner = (slice(1, -1),) * lat.dim
        new = new[inner]
        lo = lo + 1
        if new.size == 0:
            raise OutOfConeError("dependence cone exhausted")
    return Layer(k + 1, lo, new, lat.dx, layer_k.period)


def solve(v0, lat: Lattice, model: HamiltonianModel, consts: SchemeConstants,
          mode: str = "pointwise", keep=None) -> SolveResult:
    """Run the recursion from level 0 to ``lat.horizon_steps``.

    ``v0`` is a callable or a prepared level-0 :class:`Layer`.  ``keep``
    restricts which levels are stored (default: all); level 0 and the final
    level are always kept.
    """
    if model.dim != lat.dim:
        raise ConfigurationError("model and lattice dimensions differ")
    _require_cfl(consts, lat)
    layer = v0 if isinstance(v0, Layer) else discretize_initial(v0, lat, mode)
    K = lat.horizon_steps
    wanted = None if keep is None else set(int(k) for k in keep) | {0, K}
    layers = {0: layer}
    max_grad = []
    for _ in range(K):
        g = layer.ensure_grad()
        max_grad.append(float(np.nanmax(np.abs(g), initial=0.0)))
        nxt = step(layer, lat, model, consts, check=False)
        if wanted is not None and layer.level not in wanted:
            layers.pop(layer.level, None)
        layer = nxt
        layers[layer.level] = layer
    g = layer.ensure_grad()
    max_grad.append(float(np.nanmax(np.abs(g), initial=0.0)))
    return SolveResult(layers, lat, consts, model, max_grad, mode if not isinstance(v0, Layer) else "layer")


def scheme_residual(result: SolveResult, k: int) -> float:
    """Max relative residual of the recursion between stored levels ``k`` and ``k + 1``."""
    lat = result.lattice
    a, b = result.layer(k), result.layer(k + 1)
    G = a.ensure_grad()
    V = a.values
    avg = neighbour_sum(V, a.periodic) / (2 * lat.dim)
    X = _coords(lat, a.lo, V.shape)
    if a.periodic:
        nb = b.values
        sl = (slice(None),) * lat.dim
    else:
        sl = (slice(1, -1),) * lat.dim
        nb = b.values
    mask = ~np.isnan(nb)
    Gs, avs, Xs = G[sl][mask], avg[sl][mask], X[sl][mask]
    Hv = np.asarray(result.model.eval(Xs, lat.time(k), Gs), float)
    dt_v = (nb[mask] - avs) / lat.dt
    res = dt_v + Hv - result.constants.h
    scale = np.maximum(1.0, np.abs(dt_v) + np.abs(Hv) + abs(result.constants.h))
    return float(np.max(np.abs(res) / scale, initial=0.0))


def make_lattice(consts: SchemeConstants, dx: float, domain, safety: float = 0.9,
                 lam: Optional[float] = None) -> Lattice:
    """Lattice for horizon ``consts.T`` with ``lam = safety * lambda1`` unless given."""
    lam = safety * consts.lambda1 if lam is None else lam
    return Lattice.for_horizon(consts.dim, dx, lam, consts.T, domain)


# ---------------------------------------------------------------------------
# CSV


def write_layers_csv(result: SolveResult, path, levels=None) -> None:
    """One row per node carrying a value or a gradient: ``k, m1..md, v, dv1..dvd``.

    The first line is a ``# dx=.. dt=.. lambda=.. d=.. model=..`` comment;
    missing fields (gradient rows have no ``v`` and vice versa) are empty.
    """
    lat = result.lattice
    d = lat.dim
    levels = sorted(result.layers) if levels is None else sorted(levels)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# dx={lat.dx!r} dt={lat.dt!r} lambda={lat.lam!r} d={d} model={result.model.name}\n")
        w = csv.writer(fh)
        w.writerow(["k"] + [f"m{i + 1}" for i in range(d)] + ["v"] + [f"dv{i + 1}" for i in range(d)])
        for k in levels:
            layer = result.layer(k)
            G = layer.ensure_grad()
            grid = layer.index_grid().reshape(-1, d)
            V = layer.values.reshape(-1)
            Gf = G.reshape(-1, d)
            for m, v, g in zip(grid, V, Gf):
                has_v = not np.isnan(v)
                has_g = not np.any(np.isnan(g))
                if not (has_v or has_g):
                    continue
                w.writerow([k] + [int(a) for a in m] + [repr(float(v)) if has_v else ""]
                           + ([repr(float(a)) for a in g] if has_g else [""] * d))


def read_layers_csv(path):
    """Inverse of :func:`write_layers_csv`: ``(meta, rows)`` with NaN for empty fields."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        meta = dict(item.split("=", 1) for item in first.lstrip("# ").split())
        for key in ("dx", "dt", "lambda"):
            meta[key] = float(meta[key])
        meta["d"] = int(meta["d"])
        reader = csv.reader(fh)
        next(reader)
        rows = [[float(x) if x != "" else np.nan for x in row] for row in reader]
    return meta, np.array(rows, dtype=float).reshape(-1, 2 + 2 * meta["d"])
