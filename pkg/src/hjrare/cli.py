"""Command line interface.

Exit codes: 0 success, 1 failed duality check, 2 configuration error,
3 numerical failure, 4 degenerate estimate (no path exited).
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import config as cfgmod
from .errors import ConfigError, HJRareError, NumericalError, WrongModel
from .model import Kind, critical_value, critical_value_interval, validate
from .oracle import GridSpec, duality_check
from .potential import mane, potential_profile
from .sampler import SimConfig, estimate, simulate_path
from .subsolution import Subsolution, minmax, objective_curve

log = logging.getLogger("hjrare")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DEGENERATE = 0, 1, 2, 3, 4


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def write_csv(path: str, columns, rows) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            vals = [r[c] for c in columns] if isinstance(r, dict) else r
            w.writerow([_fmt(v) for v in vals])
    return path


def print_report(pairs, stream=None) -> None:
    stream = stream or sys.stdout
    for k, v in pairs:
        print(f"{k} = {_fmt(v)}", file=stream)


def _params(items) -> dict:
    out = {}
    for it in items or []:
        if "=" not in it:
            raise ConfigError(f"--param expects key=value, got {it!r}")
        k, v = it.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError as exc:
            raise ConfigError(f"--param {k}: not a number") from exc
    return out


def resolve_config(args, preset: str = "table1") -> cfgmod.RunConfig:
    """Start from ``--config`` or a preset and apply command-line overrides."""
    if args.config:
        cfg = cfgmod.load(args.config)
    else:
        cfg = {"table1": cfgmod.table1_config, "table2": cfgmod.table2_config,
               "gap": cfgmod.gap_config}[preset]()
    over = {}
    if getattr(args, "model", None):
        over["model"] = {"builtin": args.model, **_params(args.param)}
    dom = dict(cfg.domain)
    for key in ("a", "b", "x0"):
        v = getattr(args, key, None)
        if v is not None:
            dom[key] = v
    over["domain"] = dom
    if getattr(args, "T", None) is not None:
        over["T"] = [args.T]
    if getattr(args, "epsilon", None) is not None:
        over["epsilon"], over["n"] = [args.epsilon], None
    if getattr(args, "n", None) is not None:
        over["n"], over["epsilon"] = [args.n], None
    if getattr(args, "method", None):
        over["method"] = args.method
    if args.seed is not None:
        over["seed"] = args.seed
    if args.threads is not None:
        over["threads"] = args.threads
    if args.out is not None:
        over["out_dir"] = args.out
    cfg = replace(cfg, **over)
    # a --model override may switch kind: borrow the scale of the matching preset
    if getattr(args, "epsilon", None) is None and getattr(args, "n", None) is None:
        kind = cfg.build_model().kind
        if kind is Kind.DIFFUSION and not cfg.epsilon:
            cfg = replace(cfg, epsilon=cfgmod.table1_config().epsilon, n=None)
        elif kind is Kind.BIRTH_DEATH and not cfg.n:
            cfg = replace(cfg, n=cfgmod.table2_config().n, epsilon=None)
    if args.desk_scale:
        cfg = cfgmod.desk_scale(cfg, preset if not args.config else None)
    return cfg.validate()


# -- subcommands --------------------------------------------------------------------

def cmd_potential(args) -> int:
    cfg = resolve_config(args)
    m = cfg.build_model()
    x = cfg.domain["x0"] if args.x is None else args.x
    y = cfg.domain["b"] if args.y is None else args.y
    s = mane(m, args.c, x, y)
    print_report([("model", m.spec), ("c", args.c), ("x", x), ("y", y), ("S", s)])
    zs, ps = potential_profile(m, args.c, x, y, args.points)
    path = write_csv(os.path.join(cfg.out_dir, "potential.csv"), ["z", "p"], zip(zs, ps))
    log.info("wrote %s", path)
    if args.plot:
        from .plotting import plot_profile
        plot_profile(zs, ps, cfg.out_dir)
    return EXIT_OK


def cmd_critical(args) -> int:
    cfg = resolve_config(args)
    m = cfg.build_model()
    d = cfg.build_domain()
    c = critical_value(m, d)
    print_report([("model", m.spec), ("a", d.a), ("b", d.b), ("c_H", c)])
    return EXIT_OK


def cmd_minmax(args) -> int:
    cfg = resolve_config(args)
    m = cfg.build_model()
    d = cfg.build_domain()
    validate(m, d)
    res = minmax(m, d)
    print_report([("model", m.spec), ("a", d.a), ("b", d.b), ("x0", d.x0), ("T", d.T),
                  ("value", res.value), ("c_star", res.c_star), ("y_star", res.y_star),
                  ("maxmin", res.maxmin_value), ("gap", res.gap), ("K", res.K),
                  ("c_critical", res.c_critical)])
    hi = max(2.0 * res.c_star, res.c_critical + 1.0)
    cs = np.linspace(res.c_critical + 1e-6, hi, args.points)
    curves = objective_curve(m, d, cs)
    rows = [(c, curves[d.a][i], curves[d.b][i]) for i, c in enumerate(cs)]
    write_csv(os.path.join(cfg.out_dir, "minmax.csv"), ["c", "objective_a", "objective_b"], rows)
    if args.plot:
        from .plotting import plot_objective
        plot_objective(cs, curves, res.c_star, cfg.out_dir)
    return EXIT_OK


def cmd_duality(args) -> int:
    cfg = resolve_config(args)
    m = cfg.build_model()
    grid = GridSpec(args.x_lo, args.x_hi, args.nx, max(args.t), args.nt, args.v_max)
    c_crit = critical_value_interval(m, min(args.x, args.y), max(args.x, args.y))
    rep = duality_check(m, args.x, args.y, args.t, args.c, grid, args.rel_tol, c_crit)
    pairs = [("x", args.x), ("y", args.y), ("grid", f"nx={grid.nx} nt={grid.nt} v_max={grid.v_max}")]
    rows = [("t", t, sup_c, mg, res) for t, sup_c, mg, res, _ in rep.t_rows]
    rows += [("c", c, s, inf_t, res) for c, s, inf_t, res in rep.c_rows]
    passed = rep.passed
    if args.refine:
        fine = duality_check(m, args.x, args.y, args.t, [], grid.refined(), args.rel_tol, c_crit)
        for (t, _, _, r0, _), (_, _, _, r1, _) in zip(rep.t_rows, fine.t_rows):
            red = 1.0 - r1 / r0 if r0 > 0 else 0.0
            pairs.append((f"reduction_t={t:g}", red))
            passed = passed and red >= 0.25
    pairs += [("note", rep.note), ("result", "PASS" if passed else "FAIL")]
    print_report(pairs)
    write_csv(os.path.join(cfg.out_dir, "duality.csv"),
              ["kind", "level", "potential_side", "grid_side", "residual"], rows)
    if args.plot:
        from .plotting import plot_duality
        plot_duality(rep, cfg.out_dir)
    return EXIT_OK if passed else EXIT_CHECK


def _sim_config(cfg: cfgmod.RunConfig) -> SimConfig:
    m = cfg.build_model()
    T = cfg.T[0]
    d = cfg.build_domain(T)
    validate(m, d)
    res = minmax(m, d)
    sub = None if cfg.method == "standard" else Subsolution.from_minmax(cfg.method, m, d, res)
    common = dict(batches=cfg.batches, samples_per_batch=cfg.samples_per_batch,
                  seed=cfg.seed, threads=cfg.threads, T=T)
    if cfg.epsilon:
        return SimConfig(m, d, sub, epsilon=cfg.epsilon[0], dt=T * cfg.dt_factor, **common)
    return SimConfig(m, d, sub, n=cfg.n[0], **common)


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    sim = _sim_config(cfg)
    est = estimate(sim)
    pairs = [("model", sim.model.spec), ("method", cfg.method), ("T", sim.T)]
    pairs += [("epsilon", sim.epsilon), ("dt", sim.dt)] if sim.epsilon else [("n", sim.n)]
    pairs += [("batches", sim.batches), ("samples_per_batch", sim.samples_per_batch),
              ("estimate", est.mean), ("rel_err", est.rel_err), ("std_err", est.std_err),
              ("hits", est.hits), ("total_samples", est.total_samples),
              ("wall_time", est.wall_time), ("seed", est.seed),
              ("config_hash", cfg.config_hash()), ("degenerate", est.degenerate)]
    print_report(pairs)
    write_csv(os.path.join(cfg.out_dir, "batches.csv"), ["batch", "mean", "seed", "config_hash"],
              [(i, b, cfg.seed, cfg.config_hash()) for i, b in enumerate(est.batch_means)])
    if args.trace:
        rows = []
        for p in range(min(args.trace, sim.samples_per_batch)):
            rec = simulate_path(sim, 0, p, trace=True)
            rows += [(p, t, x, w) for t, x, w in rec.trace]
        write_csv(os.path.join(cfg.out_dir, "trace.csv"), ["path", "t", "x", "log_weight"], rows)
    if args.plot:
        from .plotting import plot_batches
        plot_batches(est.batch_means, cfg.out_dir)
    return EXIT_DEGENERATE if est.degenerate else EXIT_OK


def _progress(row):
    log.info("%s", ", ".join(f"{k}={_fmt(row[k])}" for k in list(row)[:5]))


def cmd_table1(args) -> int:
    from .experiments import TABLE1_COLUMNS, run_table1
    cfg = resolve_config(args, "table1")
    rows = run_table1(cfg, _progress)
    path = write_csv(os.path.join(cfg.out_dir, "table1.csv"), TABLE1_COLUMNS, rows)
    print(Path(path).read_text(), end="")
    if args.plot:
        from .plotting import plot_table1
        plot_table1(rows, cfg.out_dir)
    return EXIT_DEGENERATE if any(r["estimate"] == 0 for r in rows) else EXIT_OK


def cmd_table2(args) -> int:
    from .experiments import TABLE2_COLUMNS, run_table2
    cfg = resolve_config(args, "table2")
    rows = run_table2(cfg, _progress)
    path = write_csv(os.path.join(cfg.out_dir, "table2.csv"), TABLE2_COLUMNS, rows)
    print(Path(path).read_text(), end="")
    if args.plot:
        from .plotting import plot_table2
        plot_table2(rows, cfg.out_dir)
    return EXIT_DEGENERATE if any(r["estimate"] == 0 for r in rows) else EXIT_OK


def cmd_gap(args) -> int:
    from .experiments import run_example_gap
    cfg = resolve_config(args, "gap")
    rep = run_example_gap(cfg, simulate=not args.no_simulate, K_threshold=args.k_threshold)
    pairs = rep.rows() + [("note", n) for n in rep.notes]
    print_report(pairs)
    write_csv(os.path.join(cfg.out_dir, "example_gap.csv"), ["key", "value"], rep.rows())
    if args.plot:
        from .plotting import plot_objective
        m, d = cfg.build_model(), cfg.build_domain()
        cs = np.linspace(1e-6, max(2.0 * rep.c_star, 1.0), 101)
        plot_objective(cs, objective_curve(m, d, cs), rep.c_star, cfg.out_dir, "example_gap")
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int, help="64-bit seed override")
    common.add_argument("--desk-scale", action="store_true", help="small sampling budget")
    common.add_argument("--out", help="output directory (default from config: out)")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--plot", action="store_true", help="also write PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", help="built-in model name (double_well, sis, ...)")
    model.add_argument("--param", action="append", metavar="KEY=VALUE", help="model parameter")
    model.add_argument("--a", type=float)
    model.add_argument("--b", type=float)
    model.add_argument("--x0", type=float)
    model.add_argument("--T", type=float)

    p = argparse.ArgumentParser(prog="hjrare", description="Mane potential tools and "
                                "importance sampling for exit probabilities")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("potential", parents=[common, model], help="evaluate S^c(x, y)")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--x", type=float)
    s.add_argument("--y", type=float)
    s.add_argument("--points", type=int, default=201)
    s.set_defaults(func=cmd_potential)

    s = sub.add_parser("critical-value", parents=[common, model], help="critical value c_H")
    s.set_defaults(func=cmd_critical)

    s = sub.add_parser("minmax", parents=[common, model], help="solve the min-max problem")
    s.add_argument("--points", type=int, default=101)
    s.set_defaults(func=cmd_minmax)

    s = sub.add_parser("duality-check", parents=[common, model],
                       help="compare potential and grid action")
    s.add_argument("--x", type=float, default=1.0)
    s.add_argument("--y", type=float, default=1.42)
    s.add_argument("--t", type=float, nargs="+", default=[0.25, 0.5])
    s.add_argument("--c", type=float, nargs="*", default=[0.1, 0.5, 1.0])
    s.add_argument("--x-lo", type=float, default=0.91)
    s.add_argument("--x-hi", type=float, default=1.51)
    s.add_argument("--nx", type=int, default=401)
    s.add_argument("--nt", type=int, default=200)
    s.add_argument("--v-max", type=float, default=8.0)
    s.add_argument("--rel-tol", type=float, default=0.05)
    s.add_argument("--refine", action="store_true", help="also require a 25%% drop on refinement")
    s.set_defaults(func=cmd_duality)

    for name, fn, hlp in (("simulate", cmd_simulate, "one estimate"),
                          ("table1", cmd_table1, "double-well estimate table"),
                          ("table2", cmd_table2, "SIS estimate table"),
                          ("example-gap", cmd_gap, "max-min gap study")):
        s = sub.add_parser(name, parents=[common, model], help=hlp)
        s.add_argument("--method", choices=cfgmod.METHODS)
        s.add_argument("--epsilon", type=float)
        s.add_argument("--n", type=int)
        s.set_defaults(func=fn)
        if name == "simulate":
            s.add_argument("--trace", type=int, default=0, metavar="N",
                           help="write per-path traces for the first N paths of batch 0")
        if name == "example-gap":
            s.add_argument("--k-threshold", type=float, default=0.1)
            s.add_argument("--no-simulate", action="store_true")
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, WrongModel) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HJRareError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
