"""Command-line front end: partition one model, or run the game and baselines.

Exit codes: 0 ok, 1 input error, 2 non-convergence under ``--strict``.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from dds.cost import DeviceProfile, ServerProfile, inference_cost
from dds.game import contraction_holds
from dds.model import CATALOG, ModelFormatError, catalog_model, load_model, serialize_model, total_flops
from dds.partition import build_latency_graph, min_cut
from dds.sim import (
    MBIT,
    ScenarioConfig,
    ScenarioError,
    compare,
    convergence_study,
    load_scenario,
    run_dds,
    write_convergence_csv,
    write_summary_csv,
    write_trace_csv,
)

DEFAULT_SIZES = (5, 25, 50, 100)


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; 2 is reserved for --strict
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def resolve_model(source, seed=0):
    """``catalog:NAME`` or a path to a model file."""
    if source.startswith("catalog:"):
        name = source.split(":", 1)[1]
        if name not in CATALOG:
            raise InputError(f"unknown catalog model {name!r}; choose from {', '.join(CATALOG)}")
        return catalog_model(name, seed)
    if not os.path.isfile(source):
        raise InputError(f"no such model file: {source}")
    try:
        return load_model(source)
    except ModelFormatError as exc:
        raise InputError(f"{source}: {exc}") from None


def resolve_seed(arg_seed):
    if arg_seed is not None:
        return arg_seed
    env = os.environ.get("DDS_SEED")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise InputError(f"DDS_SEED must be an integer, got {env!r}") from None


def build_scenario(args) -> ScenarioConfig:
    cfg = ScenarioConfig()
    if args.scenario:
        if not os.path.isfile(args.scenario):
            raise InputError(f"no such scenario file: {args.scenario}")
        try:
            cfg = load_scenario(args.scenario)
        except ScenarioError as exc:
            raise InputError(f"{args.scenario}: {exc}") from None
    seed = resolve_seed(args.seed)
    try:
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if getattr(args, "n", None) is not None:
            cfg = replace(cfg, n_devices=args.n, tracked_device=min(cfg.tracked_device, args.n - 1))
    except ScenarioError as exc:
        raise InputError(str(exc)) from None
    return cfg


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_partition(args):
    seed = resolve_seed(args.seed) or 0
    g = resolve_model(args.model, seed)
    if args.g_alloc_gflops < 0:
        raise InputError("--g-alloc must be nonnegative")
    try:
        dev = DeviceProfile("cli", args.compute_gflops * 1e9, args.bandwidth_mbps * MBIT, g)
        srv = ServerProfile(max(args.g_alloc_gflops * 1e9, 1.0), args.alpha_s)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    g_alloc = args.g_alloc_gflops * 1e9
    lg = build_latency_graph(g, dev, g_alloc, args.alpha_s)
    _, p = min_cut(lg)
    bd = inference_cost(p, dev, srv, g_alloc)

    order = [v.id for v in g.vertices]
    print(f"model: {g.name} ({len(g.vertices)} layers, {total_flops(g) / 1e9:.4g} GFLOP)")
    print("local: " + " ".join(v for v in order if v in p.local_set))
    print("server: " + " ".join(v for v in order if v in p.server_set))
    print("cut: " + " ".join(f"{u}->{w}" for u, w in p.cut_edges))
    print(f"T_local={bd.t_local!r} T_net={bd.t_net!r} T_server={bd.t_server!r} T={bd.t_total!r}")
    if args.dump_latency_graph:
        if args.out:
            path = _out_dir(args) / "latency_graph.txt"
            path.write_text(lg.dump(), encoding="utf-8")
            print(f"latency graph: {path}")
        else:
            sys.stdout.write(lg.dump())
    return 0


def _report_convergence(res):
    state = "converged" if res.converged else "not converged"
    print(f"DDS N={res.n_devices}: {state} after {res.iterations} rounds, A={res.final_A!r}, "
          f"mean T={res.mean_T!r}")


def cmd_simulate(args):
    cfg = build_scenario(args)
    res = run_dds(cfg)
    out = _out_dir(args)
    write_trace_csv(out / "trace.csv", res)
    write_summary_csv(out / "summary.csv", [res])
    _report_convergence(res)
    return 2 if args.strict and not res.converged else 0


def cmd_compare(args):
    cfg = build_scenario(args)
    sizes = [args.n] if args.n is not None else list(args.sizes or DEFAULT_SIZES)
    if any(n < 1 for n in sizes):
        raise InputError("fleet sizes must be positive")
    results = compare(cfg, sizes)
    out = _out_dir(args)
    write_summary_csv(out / "summary.csv", results)
    for res in results:
        print(f"{res.method:5s} N={res.n_devices:<4d} T={res.mean_T:.6f} Ts={res.mean_Ts:.6f} "
              f"Tt={res.mean_Tt:.6f} Tl={res.mean_Tl:.6f}")
    dds = [r for r in results if r.method == "DDS"]
    for res in dds:
        _report_convergence(res)
    return 2 if args.strict and not all(r.converged for r in dds) else 0


def cmd_converge(args):
    cfg = build_scenario(args)
    a0_list = args.a0 if args.a0 is not None else [0.0, 0.01, 0.05, 0.1]
    if any(not 0 <= a <= 1 for a in a0_list):
        raise InputError("--a0 fractions must lie in [0, 1]")
    study = convergence_study(cfg, a0_list)
    out = _out_dir(args)
    write_convergence_csv(out / "convergence.csv", study)
    write_summary_csv(out / "summary.csv", list(study.values()))
    for a0, res in study.items():
        print(f"a0={a0!r}S ", end="")
        _report_convergence(res)
    return 2 if args.strict and not all(r.converged for r in study.values()) else 0


def cmd_catalog(args):
    if args.model:
        seed = resolve_seed(args.seed) or 0
        g = resolve_model(args.model, seed)
        sys.stdout.write(serialize_model(g))
        return 0
    print("name       vertices  edges  GFLOP")
    for name, (n, m, gflops) in CATALOG.items():
        print(f"{name:10s} {n:8d} {m:6d} {gflops:6.2f}")
    return 0


def cmd_validate(args):
    ok = True
    if args.model:
        seed = resolve_seed(args.seed) or 0
        try:
            g = resolve_model(args.model, seed)
        except InputError as exc:
            print(f"model: FAIL ({exc})")
            ok = False
        else:
            print(f"model: PASS ({g.name}, {len(g.vertices)} vertices, {len(g.edges)} edges)")
    cfg = build_scenario(args)
    game = cfg.game_config()
    c_max = max(total_flops(catalog_model(m, cfg.seed)) for m in cfg.models)
    holds = contraction_holds(game.gamma, c_max * cfg.alpha_server, cfg.capacity)
    bound = c_max * cfg.alpha_server / (4 * cfg.capacity ** 2)
    print(f"contraction: {'PASS' if holds else 'FAIL'} (gamma={game.gamma!r}, bound={bound!r})")
    ok = ok and holds
    return 0 if ok else 1


def build_parser():
    parser = _Parser(prog="dds", description="DNN partitioning and edge-server budget game.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, scenario=True):
        p.add_argument("--seed", type=int, default=None, help="seed override (env DDS_SEED as fallback)")
        if scenario:
            p.add_argument("--scenario", help="key=value scenario file")
            p.add_argument("--out", default=".", help="output directory")
            p.add_argument("--strict", action="store_true", help="exit 2 when the game does not converge")

    p = sub.add_parser("partition", help="optimal split of one model for one device")
    p.add_argument("--model", required=True, help="model file or catalog:NAME")
    p.add_argument("--bandwidth", dest="bandwidth_mbps", type=float, default=7.5, help="Mbit/s")
    p.add_argument("--compute", dest="compute_gflops", type=float, default=15.0, help="device GFLOPS")
    p.add_argument("--g-alloc", dest="g_alloc_gflops", type=float, default=0.0, help="server share, GFLOPS")
    p.add_argument("--alpha-s", type=float, default=1.0)
    p.add_argument("--dump-latency-graph", action="store_true")
    p.add_argument("--out", default=None, help="directory for the latency-graph dump (default stdout)")
    common(p, scenario=False)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("simulate", help="run the budget game once")
    p.add_argument("--n", type=int, default=None, help="number of devices")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="DDS against EO, SO and DADS over fleet sizes")
    p.add_argument("--n", type=int, default=None, help="single fleet size")
    p.add_argument("--sizes", type=_ints, default=None, help="comma list of fleet sizes (default 5,25,50,100)")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("converge", help="price trajectories from several initial budgets")
    p.add_argument("--n", type=int, default=None, help="number of devices")
    p.add_argument("--a0", type=_floats, default=None, help="initial budgets as fractions of S")
    common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("catalog", help="list catalog models, or print one with --model")
    p.add_argument("--model", default=None)
    common(p, scenario=False)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("validate", help="check a model file and the game's contraction condition")
    p.add_argument("--model", default=None)
    p.add_argument("--scenario", help="key=value scenario file")
    common(p, scenario=False)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
