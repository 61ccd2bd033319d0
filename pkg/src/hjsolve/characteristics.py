"""Piecewise interpolants of the discrete solution and backward characteristics.

``v_D(x, t)`` is the stored value of the solution node whose half-open box
contains ``(x, t)``; ``u_D^j`` does the same on the gradient nodes.  Backward
characteristics are the walks generated by the minimizing control.
"""
from __future__ import annotations

import contextlib
import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import OutOfDomainError
from .lattice import NodeIndex, gradient_parity, locate_cells, locate_solution_cell
from .scheme import SolveResult
from .walks import (ENUM_CAP, ControlField, _enumerate_functional, _mean_stderr,
                    _path_values, averaged_path, expected_functional_occupancy, layer_terminal,
                    minimizing_control, running_grids, sample_paths)


@contextlib.contextmanager
def _sink(target):
    """Open ``target`` for CSV writing unless it is already a text stream."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _points(result, x):
    x = np.asarray(x, float)
    scalar = x.ndim <= 1
    return x.reshape(-1, result.lattice.dim), scalar


def interp_v(result: SolveResult, x, t: float):
    """Piecewise-constant interpolant ``v_D``; ``x`` is one point or an ``(N, d)`` batch."""
    X, scalar = _points(result, x)
    m, k = locate_cells(result.lattice, X, t, "solution")
    out = result.layer(k).values_at(m)
    return float(out[0]) if scalar else out


def interp_u(result: SolveResult, x, t: float, j: int):
    """Piecewise-constant interpolant ``u_D^j`` of the ``j``-th discrete derivative."""
    X, scalar = _points(result, x)
    m, k = locate_cells(result.lattice, X, t, "gradient")
    out = result.layer(k).gradients_at(m)[:, j]
    return float(out[0]) if scalar else out


@dataclass
class PiecewisePath:
    """Piecewise-linear curve ``s -> position`` through ``(times[i], positions[i])``."""

    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.positions = np.asarray(self.positions, float).reshape(self.times.size, -1)
        if np.any(np.diff(self.times) < 0):
            raise ValueError("breakpoints must be ascending")

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def __call__(self, s):
        s = np.asarray(s, float)
        return np.stack([np.interp(s, self.times, self.positions[:, i]) for i in range(self.dim)],
                        axis=-1)

    def distance(self, other: "PiecewisePath") -> float:
        """C^0 distance on the common time interval (exact for piecewise-linear curves)."""
        lo = max(self.times[0], other.times[0])
        hi = min(self.times[-1], other.times[-1])
        s = np.union1d(self.times, other.times)
        s = np.concatenate([[lo, hi], s[(s >= lo) & (s <= hi)]])
        return float(np.max(np.abs(self(s) - other(s))))

    def to_csv(self, path) -> None:
        with _sink(path) as fh:
            w = csv.writer(fh)
            w.writerow(["s"] + [f"x{i + 1}" for i in range(self.dim)])
            for s, p in zip(self.times, self.positions):
                w.writerow([repr(float(s))] + [repr(float(v)) for v in p])


def line_path(start, end, t: float) -> PiecewisePath:
    """Straight segment from ``(start, 0)`` to ``(end, t)``."""
    return PiecewisePath(np.array([0.0, t]), np.vstack([np.ravel(start), np.ravel(end)]))


def _with_pad(times, pos, x, t):
    # gamma_D is constant at the apex on [t_{l+1}, t]
    if t > times[-1]:
        times = np.append(times, t)
        pos = np.vstack([pos, pos[-1]])
    return PiecewisePath(times, pos)


@dataclass
class PathEnsemble:
    paths: np.ndarray  # (N, n_breakpoints, d)
    times: np.ndarray
    weights: np.ndarray
    seed: Optional[int]

    def path(self, i: int) -> PiecewisePath:
        return PiecewisePath(self.times, self.paths[i])

    def distances(self, ref: PiecewisePath) -> np.ndarray:
        s = np.union1d(self.times, ref.times)
        s = s[(s >= self.times[0]) & (s <= self.times[-1])]
        r = ref(s)
        out = np.empty(self.paths.shape[0])
        for i in range(self.paths.shape[0]):
            out[i] = np.max(np.abs(self.path(i)(s) - r))
        return out

    def fraction_within(self, ref: PiecewisePath, eps: float) -> float:
        return float(np.sum(self.weights[self.distances(ref) <= eps]))

    def to_csv(self, path) -> None:
        d = self.paths.shape[2]
        with _sink(path) as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "s"] + [f"x{i + 1}" for i in range(d)] + ["weight"])
            for p in range(self.paths.shape[0]):
                for s, x in zip(self.times, self.paths[p]):
                    w.writerow([p, repr(float(s))] + [repr(float(v)) for v in x]
                               + [repr(float(self.weights[p]))])


def characteristic_apex(result: SolveResult, x, t: float) -> NodeIndex:
    node = locate_solution_cell(result.lattice, x, t)
    if node.k < 1:
        raise OutOfDomainError("characteristics need t >= dt")
    return node


def extract_characteristic(result: SolveResult, x, t: float, mode: str = "mean",
                           n: int = 1000, seed: int = 0):
    """Backward characteristic through ``(x, t)``.

    ``mode="mean"`` gives the averaged path as a :class:`PiecewisePath`,
    ``"sample"`` one random walk, ``"ensemble"`` a :class:`PathEnsemble` of ``n``.
    """
    apex = characteristic_apex(result, x, t)
    xi = minimizing_control(result, apex)
    times = np.arange(apex.k + 1) * result.lattice.dt
    if mode == "mean":
        return _with_pad(times, averaged_path(xi), x, t)
    if mode == "sample":
        ens = sample_paths(xi, 1, seed)
        return _with_pad(times, ens.positions()[0], x, t)
    if mode == "ensemble":
        ens = sample_paths(xi, n, seed)
        P = ens.positions()
        if t > times[-1]:
            times = np.append(times, t)
            P = np.concatenate([P, P[:, -1:, :]], axis=1)
        return PathEnsemble(P, times, ens.weights, seed)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class Sandwich:
    lower: float
    upper: float
    value: float
    lower_se: float = 0.0
    upper_se: float = 0.0

    def holds(self, n_se: float = 4.0, atol: float = 1e-12) -> bool:
        return (self.lower - n_se * self.lower_se - atol <= self.value
                <= self.upper + n_se * self.upper_se + atol)


def _bound_side(result, apex_m, level, j, shift, method, n, seed, cap):
    lat = result.lattice
    xi: ControlField = minimizing_control(result, NodeIndex(tuple(apex_m), level))
    run = running_grids(xi, lat, result.model, kind="grad_x", axis=j)
    term = layer_terminal(result.layer(0), shift=shift, gradient_axis=j)
    if method == "exact":
        return _enumerate_functional(xi, run, term, cap), 0.0
    if method == "occupancy":
        return expected_functional_occupancy(xi, run, term), 0.0
    if method == "mc":
        ens = sample_paths(xi, n, seed)
        return _mean_stderr(_path_values(ens, xi, run, term))
    raise ValueError(f"unknown method {method!r}")


def derivative_sandwich(result: SolveResult, node: NodeIndex, j: int, method: str = "exact",
                        n: int = 10_000, seed: int = 0, cap: int = ENUM_CAP) -> Sandwich:
    """Two-sided bound on ``(D_{x^j} v)`` at the gradient node ``node``.

    The upper bound follows walks from ``node - e_j`` (minimizing control of
    that apex) and reads the initial gradient at ``gamma^0 + e_j``; the lower
    bound mirrors it from ``node + e_j``.  Both carry ``theta * dx``.
    """
    lat = result.lattice
    m = np.asarray(node.m, dtype=np.int64)
    if int(m.sum()) % 2 != gradient_parity(node.k):
        raise ValueError("node must be a gradient node of its level")
    e = np.zeros(lat.dim, dtype=np.int64)
    e[j] = 1
    slack = result.constants.theta * lat.dx
    up, up_se = _bound_side(result, m - e, node.k, j, e, method, n, seed, cap)
    lo, lo_se = _bound_side(result, m + e, node.k, j, -e, method, n, seed + 1, cap)
    value = float(result.layer(node.k).gradient(m)[j])
    return Sandwich(lo - slack, up + slack, value, lo_se, up_se)


def one_sided_lipschitz(result: SolveResult) -> np.ndarray:
    """Per level, ``max_m ((D_x v)_{m+2} - (D_x v)_m) / (2 dx)`` (one dimension only)."""
    if result.lattice.dim != 1:
        raise ValueError("the one-sided Lipschitz diagnostic is one-dimensional")
    out = []
    for k in sorted(result.layers):
        g = result.layers[k].ensure_grad()[:, 0]
        if result.layers[k].periodic:
            q = (np.roll(g, -2) - g) / (2 * result.lattice.dx)
        else:
            q = (g[2:] - g[:-2]) / (2 * result.lattice.dx)
        out.append(np.nanmax(q) if np.any(np.isfinite(q)) else np.nan)
    return np.array(out)

