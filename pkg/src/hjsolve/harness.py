"""Refinement studies and invariant checks driven by a JSON config.

Config keys (all optional except where noted)::

    {
      "dim": 1,
      "model": {"name": "quadratic", "params": {}},
      "v0": {"name": "neg_abs", "params": {}},
      "domain": {"type": "cone"} | {"type": "periodic", "period": 1.0},
      "T": 0.5, "h": 0.0, "r": null, "R": null,
      "dx": [0.04, 0.02, 0.01],
      "lambda_safety": 0.9,
      "init_mode": "pointwise",
      "K": [-2.0, 2.0],
      "query": {"nx": 33, "nt": 9},
      "seed": 0,
      "budgets": {"enum_cap": 1048576, "mc_samples": 10000}
    }

``HJSOLVE_THREADS`` caps the number of ladder rungs solved concurrently.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from . import hamiltonian as hm
from . import initial_data as idata
from .characteristics import extract_characteristic, interp_u, interp_v
from .errors import ConfigurationError, ContractionError, EnumerationTooLargeError
from .lattice import Cone, Lattice, NodeIndex, Periodic, k_of_t, locate_cells, solution_parity
from .oracle import exact_characteristic, hopf_lax, hopf_lax_batch
from .scheme import SolveResult, solve
from .walks import (ControlField, enumerate_paths, minimizing_control, sample_paths,
                    sigma_tilde_exact, walk_stats)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("HJSOLVE_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    n = threads()
    if n == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# configuration


@dataclass
class Config:
    dim: int = 1
    model: dict = field(default_factory=lambda: {"name": "quadratic"})
    v0: dict = field(default_factory=lambda: {"name": "neg_abs"})
    domain: dict = field(default_factory=lambda: {"type": "cone"})
    T: float = 0.5
    h: float = 0.0
    r: Optional[float] = None
    R: Optional[float] = None
    dx: List[float] = field(default_factory=lambda: [0.04, 0.02, 0.01])
    lambda_safety: float = 0.9
    init_mode: str = "pointwise"
    K: list = field(default_factory=lambda: [-2.0, 2.0])
    query: dict = field(default_factory=lambda: {"nx": 33, "nt": 9})
    seed: int = 0
    budgets: dict = field(default_factory=lambda: {"enum_cap": 2**20, "mc_samples": 10_000})

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**d)
        if isinstance(cfg.dx, (int, float)):
            cfg.dx = [float(cfg.dx)]
        if not 0 < cfg.lambda_safety < 1:
            raise ConfigurationError("lambda_safety must lie in (0, 1)")
        if cfg.init_mode not in ("pointwise", "cell_average"):
            raise ConfigurationError(f"unknown init_mode {cfg.init_mode!r}")
        return cfg

    @classmethod
    def from_json(cls, path) -> "Config":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def hamiltonian(self) -> hm.HamiltonianModel:
        return hm.get_model(self.model["name"], self.dim, **self.model.get("params", {}))

    def initial(self) -> idata.InitialData:
        return idata.get_initial(self.v0["name"], self.dim, **self.v0.get("params", {}))

    def constants(self) -> hm.SchemeConstants:
        v0 = self.initial()
        r = self.r if self.r is not None else max(v0.lip, 1e-12)
        R = self.R if self.R is not None else (v0.bound if v0.bound else 1.0)
        return hm.scheme_constants(self.hamiltonian(), self.T, r, max(R, 1e-12), self.h)

    def K_box(self) -> np.ndarray:
        K = np.asarray(self.K, float)
        if K.ndim == 1:
            K = np.tile(K, (self.dim, 1))
        if K.shape != (self.dim, 2) or np.any(K[:, 1] <= K[:, 0]):
            raise ConfigurationError("K must be [lo, hi] or one [lo, hi] per axis")
        return K

    def domain_for(self, dx: float):
        kind = self.domain.get("type", "cone")
        if kind == "periodic":
            period = np.broadcast_to(np.asarray(self.domain["period"], float), (self.dim,))
            cells = np.round(period / dx).astype(int)
            if np.any(np.abs(cells * dx - period) > 1e-9 * period) or np.any(cells % 2):
                raise ConfigurationError("period must be an even multiple of dx")
            return Periodic(tuple(cells))
        if kind == "cone":
            K = self.K_box()
            centre = np.round(K.mean(axis=1) / dx).astype(int)
            radius = int(np.ceil(np.max(K[:, 1] - K[:, 0]) / (2 * dx))) + 2
            return Cone(tuple(centre), radius)
        raise ConfigurationError(f"unknown domain type {kind!r}")

    def ladder(self, consts: hm.SchemeConstants) -> List[Lattice]:
        dxs = [float(v) for v in self.dx]
        if any(b >= a for a, b in zip(dxs, dxs[1:])):
            raise ConfigurationError("dx ladder must be strictly decreasing")
        lam = self.lambda_safety * consts.lambda1
        lats = [Lattice.for_horizon(self.dim, dx, lam, self.T, self.domain_for(dx)) for dx in dxs]
        check_ladder(lats, lam)
        return lats


def check_ladder(lats: List[Lattice], lam: float) -> None:
    """Refuse ladders that do not keep ``dt / dx`` fixed (hyperbolic scaling)."""
    for lat in lats:
        if abs(lat.lam - lam) > 4 * np.finfo(float).eps * lam:
            raise ConfigurationError(f"mixed-lambda ladder: {lat.lam!r} != {lam!r}")


def _query_points(K: np.ndarray, n: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, n) for lo, hi in K]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, K.shape[0])


def _oracle(model, v0, X, t, h):
    if t == 0:
        return np.asarray(v0(X), float), None
    b = hopf_lax_batch(model, v0, X, t, h)
    return b.value, b


# ---------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceReport:
    rows: List[dict]
    rate: Optional[float]
    beta_hat: Optional[float]
    exact: bool
    K: list
    model: str
    v0: str
    lam: float
    constants_source: str
    query: dict

    @property
    def errors(self) -> np.ndarray:
        return np.array([r["sup_error"] for r in self.rows])

    def monotone(self) -> bool:
        e = self.errors
        return bool(np.all(np.diff(e) < 0))

    def to_csv(self, path) -> None:
        cols = ["dx", "dt", "lam", "sup_error", "node_error", "max_grad", "wall_time"]
        d = len(self.rows[0]["l1_grad"]) if self.rows else 0
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols + [f"l1_grad{j + 1}" for j in range(d)])
            for r in self.rows:
                w.writerow([repr(float(r[c])) for c in cols] + [repr(float(v)) for v in r["l1_grad"]])

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2)


def fit_rate(dx, err):
    """Least-squares slope of ``log err`` against ``log dx``."""
    x, y = np.log(np.asarray(dx, float)), np.log(np.asarray(err, float))
    return float(np.polyfit(x, y, 1)[0])


def _solve_rung(cfg: Config, lat: Lattice, consts, times, mode):
    model, v0 = cfg.hamiltonian(), cfg.initial()
    keep = {k_of_t(t, lat.dt) for t in times}
    t0 = time.perf_counter()
    res = solve(v0, lat, model, consts, mode, keep=keep)
    return res, time.perf_counter() - t0


def run_convergence(cfg: Config) -> ConvergenceReport:
    """Sup-error of ``v_D`` against the Hopf-Lax oracle on ``K x [0, T]`` along the ladder."""
    model, v0 = cfg.hamiltonian(), cfg.initial()
    if not model.x_independent:
        raise ConfigurationError(f"no exact oracle for {model.name}")
    consts = cfg.constants()
    lats = cfg.ladder(consts)
    K = cfg.K_box()
    X = _query_points(K, int(cfg.query.get("nx", 33)))
    times = np.linspace(0.0, cfg.T, int(cfg.query.get("nt", 9)))
    ref = {float(t): _oracle(model, v0, X, t, cfg.h) for t in times}
    ref_grad = ref[float(times[-1])][1]

    def rung(lat):
        res, wall = _solve_rung(cfg, lat, consts, times, cfg.init_mode)
        sup = node = 0.0
        for t in times:
            vals = interp_v(res, X, t)
            sup = max(sup, float(np.max(np.abs(vals - ref[float(t)][0]))))
            m, k = locate_cells(lat, X, t, "solution")
            xs = lat.coords(m)
            tk = lat.time(k)
            oracle_nodes = _oracle(model, v0, xs, tk, cfg.h)[0]
            node = max(node, float(np.max(np.abs(res.layer(k).values_at(m) - oracle_nodes))))
        l1 = []
        vol = float(np.prod(K[:, 1] - K[:, 0]))
        for j in range(lat.dim):
            u = interp_u(res, X, times[-1], j)
            g = ref_grad.gradient[:, j] if ref_grad is not None else np.zeros(len(X))
            l1.append(float(np.mean(np.abs(u - g)) * vol))
        return {"dx": lat.dx, "dt": lat.dt, "lam": lat.lam, "sup_error": sup, "node_error": node,
                "l1_grad": l1, "max_grad": float(max(res.max_grad)), "wall_time": wall}

    rows = _pmap(rung, lats)
    exact = all(r["node_error"] <= 1e-10 for r in rows)
    rate = beta = None
    if not exact and len(rows) >= 2:
        dxs = [r["dx"] for r in rows]
        errs = [r["sup_error"] for r in rows]
        rate = fit_rate(dxs, errs)
        beta = float(max(e / math.sqrt(dx) for dx, e in zip(dxs, errs)))
    return ConvergenceReport(rows, rate, beta, exact, K.tolist(), model.name, v0.name,
                             cfg.lambda_safety * consts.lambda1, consts.source,
                             {"nx": int(cfg.query.get("nx", 33)), "nt": len(times)})


@dataclass
class GradientL1Report:
    t: float
    dx: List[float]
    errors: np.ndarray  # (rungs, d)
    n_points: List[int]

    def total(self) -> np.ndarray:
        return self.errors.sum(axis=1)

    def decreasing(self) -> bool:
        return bool(np.all(np.diff(self.total()) < 0))


def run_gradient_l1(cfg: Config, t: Optional[float] = None, per_cell: int = 4) -> GradientL1Report:
    """Riemann-sum ``L^1(K)`` distance between ``u_D^j(., t)`` and the oracle gradient.

    Uses box-averaged initial data; the sum uses cell midpoints at spacing
    ``dx / per_cell`` (at least the configured query density).
    """
    model, v0 = cfg.hamiltonian(), cfg.initial()
    if not model.x_independent:
        raise ConfigurationError(f"no exact oracle for {model.name}")
    t = cfg.T if t is None else float(t)
    consts = cfg.constants()
    lats = cfg.ladder(consts)
    K = cfg.K_box()
    vol = float(np.prod(K[:, 1] - K[:, 0]))

    def rung(lat):
        res = solve(v0, lat, model, consts, "cell_average", keep={k_of_t(t, lat.dt)})
        n = max(int(cfg.query.get("nx", 33)),
                int(np.ceil(np.max(K[:, 1] - K[:, 0]) * per_cell / lat.dx)))
        axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in K]
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lat.dim)
        ref = hopf_lax_batch(model, v0, X, t, cfg.h)
        errs = [float(np.mean(np.abs(interp_u(res, X, t, j) - ref.gradient[:, j])) * vol)
                for j in range(lat.dim)]
        return errs, X.shape[0]

    out = _pmap(rung, lats)
    return GradientL1Report(t, [lat.dx for lat in lats], np.array([o[0] for o in out]),
                            [o[1] for o in out])


# ---------------------------------------------------------------------------
# characteristics


@dataclass
class CharacteristicReport:
    dx: List[float]
    mean_distance: List[float]  # sup over the query window of the mean-path C^0 distance
    fraction_within: List[float]  # ensemble mass within eps of the line through (x, t)
    eps: float
    n_paths: int
    n_queries: int
    n_irregular: int

    def distances_decrease(self) -> bool:
        return bool(np.all(np.diff(self.mean_distance) < 0))

    def fractions_increase(self) -> bool:
        return bool(np.all(np.diff(self.fraction_within) > 0))


def run_characteristic_study(cfg: Config, x, t: float, eps: float = 0.1, n_paths: int = 1000,
                             spread: float = 0.05, n_query: int = 5) -> CharacteristicReport:
    """Backward characteristics of ``v_D`` against oracle line segments along the ladder.

    The mean-path error is the largest C^0 distance over an ``n_query``-point
    grid per axis (and in time) of half-width ``spread`` around ``(x, t)``;
    irregular query points are skipped and counted.  The ensemble of
    ``n_paths`` walks is drawn at ``(x, t)`` itself with seed ``cfg.seed``.
    """
    model, v0 = cfg.hamiltonian(), cfg.initial()
    if not model.x_independent:
        raise ConfigurationError(f"no exact characteristics for {model.name}")
    x = np.atleast_1d(np.asarray(x, float))
    if t + spread > cfg.T:
        raise ConfigurationError("the query window must end before T")
    consts = cfg.constants()
    lats = cfg.ladder(consts)
    axes = [np.linspace(c - spread, c + spread, n_query) for c in x]
    Xq = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, x.size)
    Tq = np.linspace(t - spread, t + spread, n_query)
    refs, skipped = [], 0
    for tq in Tq:
        for xq in Xq:
            e = hopf_lax(model, v0, xq, tq, cfg.h)
            if e.regular:
                refs.append((xq, tq, exact_characteristic(model, xq, tq, e)))
            else:
                skipped += 1
    centre = hopf_lax(model, v0, x, t, cfg.h)
    if not centre.regular:
        raise ConfigurationError(f"({x}, {t}) is not a regular point")
    centre_line = exact_characteristic(model, x, t, centre)

    def rung(lat):
        res = solve(v0, lat, model, consts, cfg.init_mode)
        dist = max(extract_characteristic(res, xq, tq, "mean").distance(ref) for xq, tq, ref in refs)
        ens = extract_characteristic(res, x, t, "ensemble", n=n_paths, seed=cfg.seed)
        return dist, ens.fraction_within(centre_line, eps)

    out = _pmap(rung, lats)
    return CharacteristicReport([lat.dx for lat in lats], [o[0] for o in out], [o[1] for o in out],
                                eps, n_paths, len(refs), skipped)


# ---------------------------------------------------------------------------
# L1 contraction


@dataclass
class ContractionReport:
    levels: np.ndarray
    sums: np.ndarray
    box_sizes: np.ndarray
    monotone: bool


def gradient_difference_sums(a: SolveResult, b: SolveResult, centre, half: int) -> ContractionReport:
    """Sums of ``sum_j |u~^j - u^j|`` over the nested sets ``Gamma^k``.

    ``Gamma^top`` holds the gradient nodes of the top level in the index box
    of half-width ``half`` around ``centre``; ``Gamma^{k-1} = Gamma^k + B``.
    """
    lat = a.lattice
    if not lat.periodic:
        raise ConfigurationError("the contraction study needs a periodic domain")
    top = lat.horizon_steps
    shape = tuple(lat.domain.cells)
    grid = np.stack(np.meshgrid(*[np.arange(n) for n in shape], indexing="ij"), axis=-1)
    centre = np.asarray(centre, dtype=np.int64)
    # signed torus offsets from the centre
    off = np.mod(grid - centre + np.array(shape) // 2, shape) - np.array(shape) // 2
    par = np.mod(grid.sum(axis=-1), 2)
    mask = (np.abs(off).max(axis=-1) <= half) & (par == top % 2)
    sums, sizes = np.zeros(top + 1), np.zeros(top + 1, dtype=int)
    for k in range(top, -1, -1):
        du = np.abs(a.layer(k).ensure_grad() - b.layer(k).ensure_grad()).sum(axis=-1)
        sums[k] = float(np.sum(du[mask]))
        sizes[k] = int(mask.sum())
        if k:
            nxt = np.zeros_like(mask)
            for j in range(lat.dim):
                nxt |= np.roll(mask, 1, axis=j) | np.roll(mask, -1, axis=j)
            mask = nxt
    mono = bool(np.all(sums[1:] <= sums[:-1] * (1 + 1e-12) + 1e-300))
    return ContractionReport(np.arange(top + 1), sums, sizes, mono)


def run_contraction(cfg: Config, v0_a=None, v0_b=None, levels: int = 10, half: int = 4,
                    dx: Optional[float] = None) -> ContractionReport:
    """Solve two initial data on the torus and check the nested-box contraction."""
    model = cfg.hamiltonian()
    d = cfg.dim
    period = float(np.ravel(cfg.domain.get("period", 1.0))[0]) if cfg.domain.get("type") == "periodic" else 1.0
    seed = cfg.seed
    if v0_a is None:
        v0_a = idata.random_fourier(d, seed=seed, modes=3, lip=1.0, period=period)
    if v0_b is None:
        v0_b = idata.random_fourier(d, seed=seed + 1, modes=3, lip=1.0, period=period)
    dx = float(cfg.dx[0] if dx is None else dx)
    cells = int(round(period / dx))
    if cells % 2 or abs(cells * dx - period) > 1e-9:
        raise ConfigurationError("period must be an even multiple of dx")
    r = max(v0_a.lip, v0_b.lip)
    R = max(v0_a.bound or 1.0, v0_b.bound or 1.0)
    consts0 = hm.scheme_constants(model, cfg.T, r, R, cfg.h)
    lam = cfg.lambda_safety * consts0.lambda1
    lat = Lattice(d, dx, lam * dx, levels, Periodic((cells,) * d))
    consts = hm.scheme_constants(model, max(cfg.T, lat.t_final), r, R, cfg.h)
    if lam >= consts.lambda1:
        raise ConfigurationError("horizon too long for the chosen lambda")
    sa = solve(v0_a, lat, model, consts, cfg.init_mode)
    sb = solve(v0_b, lat, model, consts, cfg.init_mode)
    centre = [cells // 2] * d
    rep = gradient_difference_sums(sa, sb, centre, half)
    if not rep.monotone:
        bad = int(np.nonzero(rep.sums[1:] > rep.sums[:-1] * (1 + 1e-12))[0][0]) + 1
        raise ContractionError(f"contraction fails between levels {bad - 1} and {bad}", level=bad)
    return rep


# ---------------------------------------------------------------------------
# variance sweep


@dataclass
class VarianceRow:
    dx: float
    control: str
    method: str
    levels: np.ndarray
    sigma: np.ndarray
    delta: np.ndarray
    delta_se: np.ndarray
    bound: np.ndarray
    holds: bool


def _walk_controls(cfg: Config, lat: Lattice, consts, seed):
    """Controls on the full cone below a top-level apex."""
    model, v0 = cfg.hamiltonian(), cfg.initial()
    top = lat.horizon_steps
    apex = np.zeros(cfg.dim, dtype=np.int64)
    apex[0] = solution_parity(top)
    res = solve(v0, lat, model, consts, cfg.init_mode)
    star = minimizing_control(res, NodeIndex(tuple(apex), top))
    return {
        "xi_star": star,
        "zero": ControlField.constant(apex, top, lat.dx, lat.dt, 0.0),
        "corner": ControlField.corner(apex, top, lat.dx, lat.dt, axis=0, sign=1.0),
        "random": ControlField.random(apex, top, lat.dx, lat.dt, seed=seed),
    }


def variance_row(xi: ControlField, name: str, cap: int, n_mc: int, seed: int,
                 n_se: float = 4.0) -> VarianceRow:
    """sigma~ exactly by occupancy; delta~ by enumeration when affordable, else Monte Carlo."""
    sigma = sigma_tilde_exact(xi)
    try:
        ens = enumerate_paths(xi, cap)
        method = "exact"
    except EnumerationTooLargeError:
        ens = sample_paths(xi, n_mc, seed)
        method = "mc"
    st = walk_stats(ens)
    bound = st.bound
    scale = np.maximum(1.0, bound)[:, None]
    s_ok = np.all(sigma <= bound[:, None] + 1e-13 * scale)
    d_ok = np.all(np.maximum(st.delta_tilde - n_se * st.delta_se, 0.0) ** 2 <= sigma + 1e-13 * scale)
    return VarianceRow(xi.dx, name, method, st.levels, sigma, st.delta_tilde, st.delta_se, bound,
                       bool(s_ok and d_ok))


def run_variance_sweep(cfg: Config, horizon: Optional[float] = None) -> List[VarianceRow]:
    """sigma~/delta~ against ``(t_top - t_k) dx / lam`` for four controls per ladder rung."""
    consts = cfg.constants()
    lam = cfg.lambda_safety * consts.lambda1
    T = cfg.T if horizon is None else horizon
    cap = int(cfg.budgets.get("enum_cap", 2**20))
    n_mc = int(cfg.budgets.get("mc_samples", 10_000))
    rows = []
    dxs = [float(v) for v in cfg.dx]
    for i, dx in enumerate(dxs):
        top = max(1, k_of_t(T, lam * dx))
        apex = [0] * cfg.dim
        apex[0] = solution_parity(top)
        lat = Lattice(cfg.dim, dx, lam * dx, top, Cone(tuple(apex), 1))
        for name, xi in _walk_controls(cfg, lat, consts, cfg.seed + i).items():
            rows.append(variance_row(xi, name, cap, n_mc, cfg.seed + 17 * i))
    return rows


# ---------------------------------------------------------------------------
# invariant suite


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_checks(cfg: Config) -> List[CheckResult]:
    """Fast invariant suite on the configured model (used by ``check``)."""
    from . import checks
    return checks.run_all(cfg)


def write_rows_csv(rows: List[VarianceRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["dx", "control", "method", "k", "axis", "sigma_tilde", "delta_tilde", "bound"])
        for r in rows:
            for j, k in enumerate(r.levels):
                for i in range(r.sigma.shape[1]):
                    w.writerow([repr(r.dx), r.control, r.method, int(k), i + 1,
                                repr(float(r.sigma[j, i])), repr(float(r.delta[j, i])),
                                repr(float(r.bound[j]))])


def as_jsonable(obj):
    if isinstance(obj, dict):
        return {k: as_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [as_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj

