"""Staggered space-time lattice.

Nodes are ``(x_m, t_k) = (m * dx, k * dt)`` with ``m`` in ``Z^d``.  At level
``k`` the solution lives on nodes with ``parity(m) == (k + 1) % 2`` and the
discrete gradient on nodes with ``parity(m) == k % 2``.  All index arithmetic
is integer; coordinates are produced on demand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import ConfigurationError, OutOfDomainError

EVEN, ODD = 0, 1


@dataclass(frozen=True)
class Periodic:
    """Torus with ``cells[j]`` lattice steps along axis ``j`` (each even)."""

    cells: Tuple[int, ...]

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        if any(c <= 0 or c % 2 for c in cells):
            raise ConfigurationError("periodic cell counts must be positive and even")
        object.__setattr__(self, "cells", cells)


@dataclass(frozen=True)
class Cone:
    """Whole-space domain restricted to a dependence cone.

    The top layer (level ``horizon_steps``) covers the box of half-width
    ``radius`` lattice steps around ``apex``; level ``k`` covers half-width
    ``radius + horizon_steps - k``.
    """

    apex: Tuple[int, ...]
    radius: int = 0

    def __post_init__(self):
        object.__setattr__(self, "apex", tuple(int(a) for a in self.apex))
        if self.radius < 0:
            raise ConfigurationError("cone radius must be non-negative")


Domain = Union[Periodic, Cone]


@dataclass(frozen=True)
class NodeIndex:
    m: Tuple[int, ...]
    k: int

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if self.k < 0:
            raise ValueError("time level must be non-negative")

    @property
    def array(self):
        return np.array(self.m, dtype=np.int64)


@dataclass(frozen=True)
class Lattice:
    dim: int
    dx: float
    dt: float
    horizon_steps: int
    domain: Domain

    def __post_init__(self):
        if self.dx <= 0 or self.dt <= 0:
            raise ConfigurationError("dx and dt must be positive")
        if self.horizon_steps < 0:
            raise ConfigurationError("horizon_steps must be non-negative")
        if isinstance(self.domain, Periodic) and len(self.domain.cells) != self.dim:
            raise ConfigurationError("periodic cells must have one entry per axis")
        if isinstance(self.domain, Cone) and len(self.domain.apex) != self.dim:
            raise ConfigurationError("cone apex must have one entry per axis")

    @property
    def lam(self) -> float:
        return self.dt / self.dx

    @property
    def periodic(self) -> bool:
        return isinstance(self.domain, Periodic)

    @property
    def period(self):
        return np.array(self.domain.cells) if self.periodic else None

    @property
    def t_final(self) -> float:
        return self.horizon_steps * self.dt

    def time(self, k) -> float:
        return k * self.dt

    def coords(self, m) -> np.ndarray:
        """Physical coordinates of integer nodes (periodic nodes are wrapped first)."""
        return self.wrap(m) * self.dx

    def wrap(self, m):
        m = np.asarray(m, dtype=np.int64)
        if self.periodic:
            return np.mod(m, self.period)
        return m

    def box(self, k: int):
        """``(lo, shape)`` of the index box stored at level ``k``."""
        if self.periodic:
            return np.zeros(self.dim, dtype=np.int64), tuple(self.domain.cells)
        half = self.domain.radius + self.horizon_steps - k
        lo = np.array(self.domain.apex, dtype=np.int64) - half
        return lo, (2 * half + 1,) * self.dim

    @classmethod
    def for_horizon(cls, dim: int, dx: float, lam: float, T: float, domain: Domain) -> "Lattice":
        """Lattice with ``dt = lam * dx`` storing levels ``0 .. k(T) + 1``."""
        dt = lam * dx
        return cls(dim=dim, dx=dx, dt=dt, horizon_steps=k_of_t(T, dt) + 1, domain=domain)


def k_of_t(t: float, dt: float) -> int:
    """Integer ``k`` with ``t`` in ``[k dt, (k + 1) dt)``; tolerant to round-off."""
    q = t / dt
    k = math.floor(q)
    if q - k > 1 - 1e-9:
        k += 1
    return int(k)


def parity(m) -> int:
    """``EVEN`` (0) or ``ODD`` (1) according to the coordinate sum."""
    return int(np.sum(np.asarray(m, dtype=np.int64))) % 2


def solution_parity(k: int) -> int:
    return (k + 1) % 2


def gradient_parity(k: int) -> int:
    return k % 2


def directions(d: int) -> np.ndarray:
    """The step set ``B`` ordered as ``+e_1, -e_1, +e_2, -e_2, ...``."""
    out = np.zeros((2 * d, d), dtype=np.int64)
    for j in range(d):
        out[2 * j, j] = 1
        out[2 * j + 1, j] = -1
    return out


def reachable_set(lat: Lattice, n, level_top: int, level: int) -> np.ndarray:
    """Solution nodes at ``level`` within sup-distance ``(level_top - level) dx`` of ``n``.

    Returns a lexicographically sorted ``(M, d)`` integer array; periodic
    indices are reduced modulo the period.
    """
    if level > level_top:
        raise ValueError("level must not exceed level_top")
    n = np.asarray(n, dtype=np.int64)
    j = level_top - level
    rng = np.arange(-j, j + 1)
    off = np.stack(np.meshgrid(*([rng] * lat.dim), indexing="ij"), axis=-1).reshape(-1, lat.dim)
    pts = n + off
    keep = np.mod(pts.sum(axis=1), 2) == solution_parity(level)
    pts = lat.wrap(pts[keep])
    return np.unique(pts, axis=0)


def _cell_centre(u, anchor):
    # centre c = anchor + 2 i with c - 1 <= u < c + 1
    return anchor + 2 * np.floor((u - anchor + 1) / 2).astype(np.int64)


def _snap(u):
    r = np.round(u)
    return np.where(np.abs(u - r) <= 1e-9 * np.maximum(1.0, np.abs(u)), r, u)


def locate_cells(lat: Lattice, x, t, kind: str = "solution"):
    """Vectorised cell location: ``(m, k)`` with ``m`` of shape ``(N, d)``.

    ``kind`` is ``"solution"`` or ``"gradient"``; all points share the time ``t``.
    """
    if t < 0:
        raise OutOfDomainError(f"t={t} is negative")
    k = k_of_t(t, lat.dt)
    if k > lat.horizon_steps:
        raise OutOfDomainError(f"t={t} beyond the stored horizon {lat.t_final}")
    par = solution_parity(k) if kind == "solution" else gradient_parity(k)
    x = np.asarray(x, float).reshape(-1, lat.dim)
    anchor = np.zeros(lat.dim, dtype=np.int64)
    anchor[0] = par
    return _cell_centre(_snap(x / lat.dx), anchor), k


def _locate(lat: Lattice, x, t, kind) -> NodeIndex:
    m, k = locate_cells(lat, np.asarray(x, float).reshape(1, lat.dim), t, kind)
    return NodeIndex(tuple(m[0]), k)


def locate_solution_cell(lat: Lattice, x, t) -> NodeIndex:
    """Solution node whose half-open box ``prod [x_{m-1}, x_{m+1}) x [t_k, t_{k+1})`` holds ``(x, t)``.

    Boxes are centred on the sub-lattice ``m = (p, 0, ..., 0) + 2 Z^d`` with
    ``p`` the solution parity of level ``k``, which makes them a partition of
    space for every ``d``.
    """
    return _locate(lat, x, t, "solution")


def locate_gradient_cell(lat: Lattice, x, t) -> NodeIndex:
    """As :func:`locate_solution_cell` but for the gradient nodes of level ``k``."""
    return _locate(lat, x, t, "gradient")


def cell_box(lat: Lattice, node: NodeIndex):
    """Physical half-open box ``[lo, hi)`` in space and time for a located cell."""
    m = np.asarray(node.m, float)
    return (m - 1) * lat.dx, (m + 1) * lat.dx, node.k * lat.dt, (node.k + 1) * lat.dt
