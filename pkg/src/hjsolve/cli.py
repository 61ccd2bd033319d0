"""Command line front end: ``hjsolve {solve,walk,converge,check}``.

Every subcommand reads a JSON config (see :mod:`hjsolve.harness`).  Errors
from the library are reported on stderr with exit status 2; ``check``
exits 1 when any invariant fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from typing import List, Optional

from .characteristics import extract_characteristic
from .errors import HJError
from .harness import Config, as_jsonable, run_checks, run_convergence
from .lattice import Lattice
from .scheme import check_cfl, solve, write_layers_csv


def _load(args) -> Config:
    return Config.from_json(args.config)


def _rung(cfg: Config, dx: Optional[float]):
    consts = cfg.constants()
    dx = float(cfg.dx[0] if dx is None else dx)
    lam = cfg.lambda_safety * consts.lambda1
    lat = Lattice.for_horizon(cfg.dim, dx, lam, cfg.T, cfg.domain_for(dx))
    return consts, lat


def cmd_solve(args) -> int:
    cfg = _load(args)
    consts, lat = _rung(cfg, args.dx)
    res = solve(cfg.initial(), lat, cfg.hamiltonian(), consts, cfg.init_mode,
                keep=set() if args.final_only else None)
    write_layers_csv(res, f"{args.out}_layers.csv")
    meta = {
        "config": cfg.to_dict(),
        "lattice": {"dim": lat.dim, "dx": lat.dx, "dt": lat.dt, "lambda": lat.lam,
                    "levels": lat.horizon_steps, "t_final": lat.t_final,
                    "domain": type(lat.domain).__name__},
        "constants": asdict(consts),
        "cfl": asdict(check_cfl(consts, lat)),
        "max_grad": res.max_grad,
        "stored_levels": sorted(res.layers),
    }
    with open(f"{args.out}.json", "w", encoding="utf-8") as fh:
        json.dump(as_jsonable(meta), fh, indent=2)
    print(f"wrote {args.out}_layers.csv and {args.out}.json ({lat.horizon_steps} steps, dx={lat.dx})")
    return 0


def cmd_walk(args) -> int:
    cfg = _load(args)
    consts, lat = _rung(cfg, args.dx)
    if len(args.x) != cfg.dim:
        raise HJError(f"--x needs {cfg.dim} coordinate(s), got {len(args.x)}")
    res = solve(cfg.initial(), lat, cfg.hamiltonian(), consts, cfg.init_mode)
    seed = cfg.seed if args.seed is None else args.seed
    out = extract_characteristic(res, args.x, args.t, args.mode, n=args.n, seed=seed)
    out.to_csv(args.out or sys.stdout)
    return 0


def cmd_converge(args) -> int:
    cfg = _load(args)
    rep = run_convergence(cfg)
    rep.to_csv(f"{args.out}.csv")
    rep.to_json(f"{args.out}.json")
    for r in rep.rows:
        print(f"dx={r['dx']:<10g} sup_error={r['sup_error']:.4e}  wall={r['wall_time']:.2f}s")
    if rep.exact:
        print("scheme is exact on this configuration (node error <= 1e-10)")
    elif rep.rate is not None:
        print(f"rate={rep.rate:.3f} beta_hat={rep.beta_hat:.3f} monotone={rep.monotone()}")
    return 0


def cmd_check(args) -> int:
    cfg = _load(args)
    results = run_checks(cfg)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hjsolve", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the scheme; write layers CSV and metadata JSON")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="output prefix")
    s.add_argument("--dx", type=float, help="grid spacing (default: first ladder entry)")
    s.add_argument("--final-only", action="store_true", help="store levels 0 and final only")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("walk", help="backward characteristic through (x, t)")
    w.add_argument("--config", required=True)
    w.add_argument("--x", type=float, nargs="+", required=True)
    w.add_argument("--t", type=float, required=True)
    w.add_argument("--mode", choices=["mean", "sample", "ensemble"], default="mean")
    w.add_argument("--n", type=int, default=1000)
    w.add_argument("--seed", type=int)
    w.add_argument("--dx", type=float)
    w.add_argument("--out", help="CSV path (default: stdout)")
    w.set_defaults(func=cmd_walk)

    c = sub.add_parser("converge", help="refinement study against the Hopf-Lax oracle")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True, help="output prefix")
    c.set_defaults(func=cmd_converge)

    k = sub.add_parser("check", help="invariant suite; exit status 1 on failure")
    k.add_argument("--config", required=True)
    k.set_defaults(func=cmd_check)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HJError, OSError, ValueError, KeyError) as exc:
        print(f"hjsolve {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
