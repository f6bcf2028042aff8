"""Command-line front end for the experiment harness.

Subcommands: vqe (train and save parameters), run (one scenario config),
sweep (a config with a grid of overrides), queries (measurement-count
tables), oracle (ad-hoc trace evaluation for debugging).  Exit codes:
0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import models
from .channels import NoiseModel, noiseless
from .circuits import attach_noise, build_ansatz, dual_state, run as run_circuit
from .errors import ConfigError
from .experiments import run_experiment, write_outputs
from .pauli import PauliTerm, build_ising, expect_pauli
from .subspace import SubspaceSpec, plan_queries
from .vqe import exact_ground, optimize


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as ex:
        raise ConfigError(f"cannot read config {path}: {ex}") from ex


def _cmd_vqe(args) -> int:
    n, edges = models.graph(args.graph)
    h = build_ising(edges, n)
    res = optimize(n, args.layers, h, iters=args.iters, seed=args.seed)
    e_true, _ = exact_ground(h)
    payload = list(map(float, res.params))
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "w") as fh:
        json.dump(payload, fh)
    print(f"graph={args.graph} layers={args.layers} iters={res.iterations} "
          f"energy={res.energy:.10f} bias={res.energy - e_true:.3e} -> {args.out}")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.scenario is not None:
        cfg["scenario"] = args.scenario
    written = run_experiment(cfg, args.out_dir)
    for path in written:
        print(path)
    return 0


def _grid_points(grid: dict) -> list[dict]:
    keys = sorted(grid)
    points = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        points.append(dict(zip(keys, combo)))
    return points


def _apply_override(cfg: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    grid = cfg.pop("grid", None)
    if not grid:
        raise ConfigError("sweep config needs a 'grid' mapping of dotted keys")
    points = _grid_points(grid)

    def one(idx_point):
        idx, point = idx_point
        sub = json.loads(json.dumps(cfg))
        for key, val in point.items():
            _apply_override(sub, key, val)
        out = os.path.join(args.out_dir, f"point-{idx:03d}")
        return run_experiment(sub, out)

    results = []
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(one, enumerate(points)))
    else:
        results = [one(p) for p in enumerate(points)]
    for written in results:
        for path in written:
            print(path)
    return 0


def _cmd_queries(args) -> int:
    n, edges = models.graph(args.graph)
    h = build_ising(edges, n)
    rows = []
    for kind in args.kinds:
        for m in range(args.m_min, args.m_max + 1):
            kwargs = {}
            if kind == "dc":
                kwargs["partition"] = models.partition(args.partition)
                kwargs["boundary_state_only"] = args.state_only_boundary
            spec = SubspaceSpec(kind, m, h, **kwargs)
            for reuse in (False, True):
                rows.append((kind, m, int(reuse), plan_queries(spec, reuse).q))
    cfg = {"scenario": "queries", "graph": args.graph, "seed": 0}
    write_outputs({"queries": (("kind", "m", "reuse", "q"), rows)}, cfg, args.out_dir)
    for kind, m, reuse, q in rows:
        print(f"{kind:6s} M={m} reuse={reuse}: Q={q}")
    return 0


def _cmd_oracle(args) -> int:
    n, edges = models.graph(args.graph)
    h = build_ising(edges, n)
    if args.params_file:
        with open(args.params_file) as fh:
            params = np.array(json.load(fh), dtype=float)
    else:
        params = np.zeros(2 * n * (args.layers + 1))
    ansatz = build_ansatz(n, args.layers, params, edges)
    noise = (noiseless() if args.p1 == 0.0
             else NoiseModel(kind=args.noise_kind, p1=args.p1))
    circ = attach_noise(ansatz, noise, seed=args.seed)
    rho = run_circuit(circ)
    bar = dual_state(circ)
    obs = PauliTerm(args.obs, 1.0)
    sym = 0.5 * (bar @ rho + rho @ bar)
    print(f"Tr[state P]        = {np.real(expect_pauli(rho, obs.axes)): .12f}")
    print(f"Tr[dual P]         = {np.real(expect_pauli(bar, obs.axes)): .12f}")
    print(f"Tr[sym-product P]  = {np.real(expect_pauli(sym, obs.axes)): .12f}")
    print(f"Tr[dual state]     = {np.real(np.trace(bar @ rho)): .12f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qemlab",
                                 description="mitigation-pipeline experiment harness")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vqe", help="train ansatz parameters and save them as JSON")
    p.add_argument("--graph", default="path-8")
    p.add_argument("--layers", type=int, default=8)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_vqe)

    p = sub.add_parser("run", help="run one scenario config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scenario", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run a config over a grid of overrides")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("queries", help="emit measurement-count tables")
    p.add_argument("--graph", default="path-8")
    p.add_argument("--kinds", nargs="+", default=["power", "fault", "dc"])
    p.add_argument("--m-min", type=int, default=2)
    p.add_argument("--m-max", type=int, default=5)
    p.add_argument("--partition", default="half-4-4")
    p.add_argument("--state-only-boundary", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_queries)

    p = sub.add_parser("oracle", help="ad-hoc trace evaluation for debugging")
    p.add_argument("--graph", default="path-4")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--obs", required=True)
    p.add_argument("--noise-kind", default="stochastic_pauli")
    p.add_argument("--p1", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params-file", default=None)
    p.set_defaults(func=_cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return 1
    except Exception as ex:  # noqa: BLE001 - surface as runtime failure
        print(f"runtime error: {type(ex).__name__}: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
