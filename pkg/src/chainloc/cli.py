"""Command-line interface.

Subcommands: generate, solve, grid, oracle, baseline, locations.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import bench
from .instance import (
    DEFAULT_SEEDS,
    GeneratorConfig,
    SeedSet,
    generate_instance,
    read_instance,
    write_instance,
)
from .market import DecayModel, EXPONENTIAL, POWER, TripMix
from .optimizer import OptimizerConfig, multistart_optimize
from .validation import grid_oracle_p1, random_baseline

_DECAY_NAMES = {"power": POWER, "exp": EXPONENTIAL, "exponential": EXPONENTIAL}


def _add_instance_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", help="instance file to load")
    parser.add_argument("--n", type=int, help="generate an instance with this many demand points")
    parser.add_argument("--gen-seed", type=int, default=None,
                        help="base seed for generated instances (derives one stream per entity class)")


def _resolve_instance(args):
    if args.instance is not None:
        return read_instance(args.instance)
    if args.n is None:
        raise SystemExit("either --instance or --n is required")
    seeds = DEFAULT_SEEDS if args.gen_seed is None else SeedSet.derive(args.gen_seed)
    return generate_instance(args.n, seeds=seeds)


def _add_model_flags(parser: argparse.ArgumentParser, decay_choices=("power", "exp")) -> None:
    parser.add_argument("--pi", type=float, default=0.0, help="proportion of multipurpose trips")
    parser.add_argument("--decay", choices=decay_choices, default="power")
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0,
                        help="exponential decay parameter (power decay is fixed at 2)")
    parser.add_argument("--attractiveness", type=float, default=1.0,
                        help="attractiveness of each new facility")


def _decay_for(args, instance) -> DecayModel:
    kind = _DECAY_NAMES[args.decay]
    if kind == POWER:
        return DecayModel.power(instance)
    return DecayModel.exponential(args.lam)


def cmd_generate(args) -> int:
    seeds = DEFAULT_SEEDS if args.seed is None else SeedSet.derive(args.seed)
    instance = generate_instance(
        args.n,
        seeds=seeds,
        config=GeneratorConfig(
            n_competitors=args.competitors,
            n_clusters=args.clusters,
            b_range=tuple(args.b_range),
            attractiveness_range=tuple(args.attr_range),
        ),
    )
    write_instance(instance, args.out)
    print(f"wrote n={instance.n} instance ({len(instance.competitors)} competitors, "
          f"{len(instance.clusters)} clusters) to {args.out}")
    return 0


def cmd_solve(args) -> int:
    instance = _resolve_instance(args)
    decay = _decay_for(args, instance)
    mix = TripMix(args.pi)
    config = OptimizerConfig(starts=args.starts, seed=args.seed)
    started = time.perf_counter()
    solution = multistart_optimize(
        instance, args.p, decay, mix, config=config, attractiveness=args.attractiveness
    )
    minutes = (time.perf_counter() - started) / 60.0
    proportion = solution.value / instance.total_buying_power
    record = bench.ResultRecord(
        n=instance.n, p=args.p, pi=args.pi, decay=decay.kind, lam=decay.lam,
        proportion=proportion, total_share=solution.value,
        starts=args.starts, minutes=minutes, layout=solution.layout,
    )

    if args.format == "json":
        payload = {
            "n": instance.n, "p": args.p, "pi": args.pi,
            "decay": decay.kind, "lambda": decay.lam,
            "proportion": proportion, "total_share": solution.value,
            "starts": args.starts, "minutes": minutes,
            "start_index": solution.start_index,
            "iterations": solution.iterations,
            "converged": solution.converged,
            "facilities": [
                {"x": f.x, "y": f.y, "a": f.a} for f in solution.layout.variable
            ],
        }
        text = json.dumps(payload, indent=2)
        _emit(text, args.out)
    elif args.format == "csv":
        if args.out:
            bench.write_records_csv([record], args.out)
        else:
            print(bench.records_csv_text([record]), end="")
    else:
        print(f"n={instance.n} p={args.p} pi={args.pi:g} decay={decay.kind}")
        print(f"proportion={proportion:.5f} total_share={solution.value:.6f}")
        print(f"start_index={solution.start_index} iterations={solution.iterations} "
              f"converged={solution.converged} minutes={minutes:.3f}")
        for f in solution.layout.variable:
            print(f"  facility x={f.x:.6f} y={f.y:.6f} a={f.a:g}")
        if args.out:
            bench.write_records_csv([record], args.out)
    return 0


def cmd_grid(args) -> int:
    kinds = (POWER, EXPONENTIAL) if args.decay == "both" else (_DECAY_NAMES[args.decay],)
    grid = bench.ExperimentGrid(
        n_values=tuple(args.n),
        p_values=tuple(args.p),
        pi_values=tuple(args.pi),
        decay_kinds=kinds,
        exp_lambda=args.lam,
        attractiveness=args.attractiveness,
        optimizer=OptimizerConfig(starts=args.starts, seed=args.seed),
        instance_dir=args.instance_dir,
    )
    progress = None
    if args.verbose:
        def progress(rec):
            print(f"  n={rec.n} p={rec.p} pi={rec.pi:g} {rec.decay}: "
                  f"{rec.proportion:.5f} ({rec.minutes:.2f} min)", file=sys.stderr)
    records, failures = bench.run_grid(grid, progress=progress,
                                       parallel_cells=args.parallel_cells)
    tables = bench.render_tables(records)
    print(tables, end="")
    if args.tables_out:
        with open(args.tables_out, "w", encoding="utf-8") as fh:
            fh.write(tables)
    if failures:
        print(bench.render_failures(failures), end="")
    if args.out:
        bench.write_records_csv(records, args.out)
        print(f"wrote {len(records)} records to {args.out}")
    return 1 if failures else 0


def cmd_oracle(args) -> int:
    instance = _resolve_instance(args)
    decay = _decay_for(args, instance)
    point, value = grid_oracle_p1(
        instance, decay, TripMix(args.pi),
        resolution=args.resolution, attractiveness=args.attractiveness,
    )
    proportion = value / instance.total_buying_power
    print(f"best point x={point[0]:.6f} y={point[1]:.6f}")
    print(f"value={value:.6f} proportion={proportion:.5f}")
    return 0


def cmd_baseline(args) -> int:
    instance = _resolve_instance(args)
    decay = _decay_for(args, instance)
    mean = random_baseline(
        instance, args.p, decay, TripMix(args.pi),
        trials=args.trials, seed=args.seed, attractiveness=args.attractiveness,
    )
    print(f"mean proportion over {args.trials} random layouts: {mean:.5f}")
    print(f"p/(10+p) heuristic: {args.p / (10 + args.p):.5f}")
    return 0


def cmd_locations(args) -> int:
    instance = _resolve_instance(args)
    decay = _decay_for(args, instance)
    mix = TripMix(args.pi)
    config = OptimizerConfig(starts=args.starts, seed=args.seed)
    solution = multistart_optimize(
        instance, args.p, decay, mix, config=config, attractiveness=args.attractiveness
    )
    bench.write_locations_csv(instance, solution.layout, args.out)
    near = bench.cluster_coincidences(instance, solution.layout)
    proportion = solution.value / instance.total_buying_power
    print(f"wrote location dump to {args.out} (proportion={proportion:.5f})")
    print(f"new facilities within 1e-3 of a cluster: {near}")
    return 0


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainloc",
        description="Competitive multi-facility location with multipurpose shopping trips",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a reproducible instance file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--competitors", type=int, default=10)
    g.add_argument("--clusters", type=int, default=10)
    g.add_argument("--b-range", type=float, nargs=2, default=[0.0, 2.0], metavar=("LO", "HI"))
    g.add_argument("--attr-range", type=float, nargs=2, default=[0.5, 2.0], metavar=("LO", "HI"))
    g.add_argument("--seed", type=int, default=None,
                   help="base seed; per-class streams are derived from it")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="place p new facilities on one instance")
    _add_instance_source(s)
    _add_model_flags(s)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--starts", type=int, default=20)
    s.add_argument("--seed", type=int, default=54_321, help="seed for the start layouts")
    s.add_argument("--out", default=None)
    s.add_argument("--format", choices=("text", "csv", "json"), default="text")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("grid", help="run an experiment grid and emit tables + CSV")
    r.add_argument("--n", type=int, nargs="+", default=list(bench.DEFAULT_N_VALUES))
    r.add_argument("--p", type=int, nargs="+", default=list(bench.DEFAULT_P_VALUES))
    r.add_argument("--pi", type=float, nargs="+", default=list(bench.DEFAULT_PI_VALUES))
    r.add_argument("--decay", choices=("power", "exp", "both"), default="both")
    r.add_argument("--lambda", dest="lam", type=float, default=1.0)
    r.add_argument("--attractiveness", type=float, default=1.0)
    r.add_argument("--starts", type=int, default=20)
    r.add_argument("--seed", type=int, default=54_321)
    r.add_argument("--instance-dir", default=None,
                   help="directory with n<k>.csv instance files (default: generate)")
    r.add_argument("--parallel-cells", type=int, default=1)
    r.add_argument("--out", default=None, help="results CSV path")
    r.add_argument("--tables-out", default=None, help="also write the tables to this file")
    r.add_argument("--verbose", action="store_true")
    r.set_defaults(func=cmd_grid)

    o = sub.add_parser("oracle", help="dense-grid brute force for p=1")
    _add_instance_source(o)
    _add_model_flags(o)
    o.add_argument("--resolution", type=int, default=201)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("baseline", help="mean share of randomly placed facilities")
    _add_instance_source(b)
    _add_model_flags(b)
    b.add_argument("--p", type=int, required=True)
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--seed", type=int, default=86_419)
    b.set_defaults(func=cmd_baseline)

    loc = sub.add_parser("locations", help="solve and dump entity locations as CSV")
    _add_instance_source(loc)
    _add_model_flags(loc)
    loc.add_argument("--p", type=int, required=True)
    loc.add_argument("--starts", type=int, default=20)
    loc.add_argument("--seed", type=int, default=54_321)
    loc.add_argument("--out", required=True)
    loc.set_defaults(func=cmd_locations)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
