"""Command line front end: solve, sweep, extend, simulate, verify.

Every run writes a manifest next to its artifacts.  Exit codes: 0 on
success, 1 on malformed input, 2 when the iteration cap was hit, 3 when
the divergence guard fired.  Identical seeds and configs produce byte
identical CSV output at any worker count (the BAMLE_THREADS cap is
honored but results never depend on it).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bias import BiasParams, make_bias, unbiased
from .extensions import lambda_extension, psi_extension
from .fields import ValueField
from .game import Strategy, play
from .presets import build_preset, PRESETS
from .solver import SolveConfig, solve
from .spaces import load_space
from .verify import VerifyConfig, run_all

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_ITERATION_CAP = 2
EXIT_DIVERGED = 3


@dataclass
class RunManifest:
    """Provenance record written beside every emitted artifact."""

    command: str
    argv: list
    inputs: list
    bias: dict
    config: dict
    outputs: list = field(default_factory=list)
    seed: int | None = None
    tool_version: str = __version__
    wall_time_s: float = 0.0

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.__dict__, fh, indent=1, sort_keys=True)
            fh.write("\n")


def worker_cap() -> int:
    """Worker cap from BAMLE_THREADS; computation is vectorized and the
    results are worker-count invariant by construction."""
    raw = os.environ.get("BAMLE_THREADS", "")
    if not raw:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise SystemExit(f"BAMLE_THREADS must be an integer, got {raw!r}")
    return max(1, cap)


def _load_problem(args):
    """Build (space, bias) from --input JSON or --preset flags."""
    if args.preset:
        kwargs = {}
        if args.preset == "counterexample-ray":
            if args.a is not None:
                kwargs["a"] = args.a
            if args.n_size is not None:
                kwargs["n"] = args.n_size
        elif args.preset == "cone-1d":
            if args.cone_slope is not None:
                kwargs["slope_a"] = args.cone_slope
            if args.beta is not None:
                kwargs["beta"] = args.beta
            if args.epsilon is not None:
                kwargs["epsilon"] = args.epsilon
        elif args.preset == "path-1d":
            if args.n_size is not None:
                kwargs["n"] = args.n_size
            if args.beta is not None:
                kwargs["beta"] = args.beta
            if args.epsilon is not None:
                kwargs["epsilon"] = args.epsilon
        elif args.preset == "square-2d":
            if args.n_size is not None:
                kwargs["n"] = args.n_size
            if args.beta is not None:
                kwargs["beta"] = args.beta
            if args.boundary is not None:
                kwargs["boundary"] = args.boundary
            if args.epsilon is not None:
                kwargs["epsilon"] = args.epsilon
        space, bias = build_preset(args.preset, **kwargs)
        return space, bias
    if not args.input:
        raise SystemExit("need --input FILE or --preset NAME")
    with open(args.input) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON in {args.input} "
              f"at line {exc.lineno} column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        raise _BadInput() from exc
    try:
        space = load_space(doc)
    except (ValueError, KeyError) as exc:
        print(f"error: invalid problem file {args.input}: {exc}",
              file=sys.stderr)
        raise _BadInput() from exc
    beta = args.beta if args.beta is not None else doc.get("beta", 1.0)
    if space.is_grid:
        eps = args.epsilon if args.epsilon is not None else space.epsilon
        if abs(eps - space.epsilon) > 1e-12:
            # rebuild the lattice: a matched grid (h == epsilon) rescales
            # its step with the move radius, otherwise only the radius moves
            from .spaces import GridDomain
            new_h = eps if abs(space.h - space.epsilon) < 1e-12 else space.h
            space = GridDomain(space.dim, list(space.extent), new_h, eps,
                               space._boundary_spec, holes=space.holes,
                               boundary_name=space.boundary_name)
    else:
        eps = args.epsilon if args.epsilon is not None else space.edge_length
    bias = make_bias(beta, eps) if beta > 0 else unbiased(eps)
    return space, bias


class _BadInput(Exception):
    pass


def _bias_dict(bias: BiasParams) -> dict:
    return {"beta": bias.beta, "epsilon": bias.epsilon, "rho": bias.rho,
            "theta": bias.theta, "r_inv": bias.r_inv}


def _emit_field(space, fld, outdir, stem, fmt, outputs):
    if fmt in ("json", "both"):
        p = os.path.join(outdir, f"{stem}.json")
        fld.to_json(p)
        outputs.append(p)
    if fmt in ("csv", "both"):
        p = os.path.join(outdir, f"{stem}.csv")
        fld.to_csv(p)
        outputs.append(p)


def _solve_config(args) -> SolveConfig:
    init = args.init
    if init.startswith("const:"):
        init = float(init.split(":", 1)[1])
    elif init == "lambda":
        init = "from_lambda"
    elif init == "psi":
        init = "from_psi"
    else:
        raise SystemExit(f"unknown --init {args.init!r}")
    return SolveConfig(tolerance=args.tolerance,
                       max_iterations=args.max_iters, init=init)


def _finish(manifest, outdir, started, code):
    manifest.wall_time_s = time.perf_counter() - started
    manifest.write(os.path.join(outdir, "manifest.json"))
    return code


def cmd_solve(args) -> int:
    started = time.perf_counter()
    space, bias = _load_problem(args)
    config = _solve_config(args)
    fld = solve(space, bias, config)
    outdir = args.output_dir
    os.makedirs(outdir, exist_ok=True)
    outputs = []
    _emit_field(space, fld, outdir, "field", args.format, outputs)
    if args.figures:
        from .plotting import render_field
        outputs.append(render_field(space, fld,
                                    os.path.join(outdir, "field.png")))
    manifest = RunManifest("solve", sys.argv[1:],
                           [args.input or f"preset:{args.preset}"],
                           _bias_dict(bias),
                           {"tolerance": config.tolerance,
                            "max_iterations": config.max_iterations,
                            "init": str(config.init),
                            "format": args.format},
                           outputs)
    code = EXIT_OK
    if fld.flag == "max_iterations":
        code = EXIT_ITERATION_CAP
    elif fld.flag == "diverged":
        code = EXIT_DIVERGED
    print(f"solve: {space.n} nodes, {fld.iterations} sweeps, "
          f"residual {fld.residual:.3e}, flag={fld.flag or 'converged'}")
    return _finish(manifest, outdir, started, code)


def _shared_values(lo, hi):
    """Value pairs on the common node set of two fields.

    Grids are matched by physical position (an epsilon sweep changes the
    lattice indexing); graphs are matched by node id.
    """
    if lo.space.is_grid and hi.space.is_grid:
        def keys(space):
            return {tuple(np.round(p, 12)): i
                    for i, p in enumerate(space.positions)}
        klo, khi = keys(lo.space), keys(hi.space)
        shared = sorted(set(klo) & set(khi))
        a = np.array([lo.values[klo[s]] for s in shared])
        b = np.array([hi.values[khi[s]] for s in shared])
        return a, b
    shared = [v for v in lo.space.ids if v in hi.space.id_index]
    a = np.array([lo.value(v) for v in shared])
    b = np.array([hi.value(v) for v in shared])
    return a, b


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    values = [float(v) for v in args.values.split(",")]
    if sorted(values) != values:
        raise SystemExit("--values must be sorted ascending")
    config = _solve_config(args)
    outdir = args.output_dir
    os.makedirs(outdir, exist_ok=True)
    outputs = []

    params, fields, statuses = [], [], []
    base_space = None
    for v in values:
        if args.axis == "beta":
            args.beta = v
            space, bias = _load_problem(args)
        else:
            args.epsilon = v
            space, bias = _load_problem(args)
        base_space = base_space or space
        fld = solve(space, bias, config)
        params.append(v)
        fields.append(fld)
        statuses.append(fld.flag or "converged")

    rows_path = os.path.join(outdir, "sweep.csv")
    with open(rows_path, "w", newline="") as fh:
        fh.write("param,node,value\n")
        for v, fld in zip(params, fields):
            sp = fld.space
            for i in range(sp.n):
                fh.write(f"{v:.17g},{sp.ids[i]},{fld.values[i]:.17g}\n")
    outputs.append(rows_path)

    summary_path = os.path.join(outdir, "sweep_summary.csv")
    with open(summary_path, "w", newline="") as fh:
        fh.write("param_lo,param_hi,status_hi,shared_nodes,"
                 "max_abs_diff,min_signed_diff\n")
        for k in range(len(params)):
            if k == 0:
                fh.write(f",{params[0]:.17g},{statuses[0]},,,\n")
                continue
            lo, hi = fields[k - 1], fields[k]
            a, b = _shared_values(lo, hi)
            fh.write(f"{params[k-1]:.17g},{params[k]:.17g},{statuses[k]},"
                     f"{len(a)},{np.max(np.abs(b - a)):.17g},"
                     f"{np.min(b - a):.17g}\n")
    outputs.append(summary_path)

    if args.figures:
        from .plotting import render_sweep
        outputs.append(render_sweep(base_space, params, fields, args.axis,
                                    os.path.join(outdir, "sweep.png")))
    manifest = RunManifest("sweep", sys.argv[1:],
                           [args.input or f"preset:{args.preset}"],
                           {"axis": args.axis, "values": values},
                           {"tolerance": config.tolerance,
                            "init": str(config.init)},
                           outputs)
    bad = [s for s in statuses if s not in ("converged",)]
    code = EXIT_ITERATION_CAP if "max_iterations" in bad else \
        (EXIT_DIVERGED if "diverged" in bad else EXIT_OK)
    print(f"sweep: {len(values)} solves on axis {args.axis}")
    return _finish(manifest, outdir, started, code)


def cmd_extend(args) -> int:
    started = time.perf_counter()
    space, bias = _load_problem(args)
    which = args.which
    vals = psi_extension(space, bias.beta) if which == "psi" else \
        lambda_extension(space, bias.beta)
    fld = ValueField(space, vals,
                     direction="from_above" if which == "psi" else "from_below")
    outdir = args.output_dir
    os.makedirs(outdir, exist_ok=True)
    outputs = []
    _emit_field(space, fld, outdir, f"extension_{which}", args.format, outputs)
    if args.figures:
        from .plotting import render_field
        outputs.append(render_field(space, fld,
                                    os.path.join(outdir,
                                                 f"extension_{which}.png"),
                                    title=f"{which} extension"))
    manifest = RunManifest("extend", sys.argv[1:],
                           [args.input or f"preset:{args.preset}"],
                           _bias_dict(bias), {"which": which}, outputs)
    print(f"extend: wrote {which} extension over {space.n} nodes")
    return _finish(manifest, outdir, started, EXIT_OK)


def _parse_strategy(text: str, fld) -> Strategy:
    if text == "greedy":
        return Strategy("greedy", field=fld)
    if text == "random":
        return Strategy("random")
    if text.startswith("toward:"):
        return Strategy("pull_toward", target=text.split(":", 1)[1])
    if text.startswith("away:"):
        return Strategy("pull_away", target=text.split(":", 1)[1])
    raise SystemExit(f"unknown strategy {text!r}")


def _resolve_node(space, raw):
    if raw in space.id_index:
        return raw
    try:
        num = int(raw)
    except (TypeError, ValueError):
        num = None
    if num is not None and num in space.id_index:
        return num
    raise SystemExit(f"unknown node {raw!r}")


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    space, bias = _load_problem(args)
    dp = solve(space, bias, SolveConfig(tolerance=args.tolerance))
    start = _resolve_node(space, args.start)
    strat_i = _parse_strategy(args.strategy_i, dp)
    strat_ii = _parse_strategy(args.strategy_ii, dp)
    if args.strategy_i.startswith(("toward:", "away:")):
        strat_i = Strategy(strat_i.kind,
                           target=_resolve_node(space, strat_i.target))
    if args.strategy_ii.startswith(("toward:", "away:")):
        strat_ii = Strategy(strat_ii.kind,
                            target=_resolve_node(space, strat_ii.target))
    stats = play(space, bias, start, strat_i, strat_ii, args.episodes,
                 args.seed, args.max_steps)
    outdir = args.output_dir
    os.makedirs(outdir, exist_ok=True)
    outputs = []
    if args.format in ("json", "both"):
        p = os.path.join(outdir, "stats.json")
        with open(p, "w") as fh:
            d = stats.to_json_dict()
            d["dp_value_at_start"] = dp.value(start)
            json.dump(d, fh, indent=1, sort_keys=True)
            fh.write("\n")
        outputs.append(p)
    if args.format in ("csv", "both"):
        p = os.path.join(outdir, "stats.csv")
        with open(p, "w", newline="") as fh:
            fh.write("start,n,mean,se,term_rate,steps,seed\n")
            fh.write(f"{start},{stats.n_episodes},"
                     f"{stats.mean_payoff:.17g},{stats.std_error:.17g},"
                     f"{stats.termination_rate:.17g},"
                     f"{stats.mean_length:.17g},{stats.rng_seed}\n")
        outputs.append(p)
    if args.figures:
        from .plotting import render_stats
        outputs.append(render_stats(stats, os.path.join(outdir, "stats.png")))
    manifest = RunManifest("simulate", sys.argv[1:],
                           [args.input or f"preset:{args.preset}"],
                           _bias_dict(bias),
                           {"start": str(start), "episodes": args.episodes,
                            "strategy_i": args.strategy_i,
                            "strategy_ii": args.strategy_ii,
                            "max_steps": args.max_steps},
                           outputs, seed=args.seed)
    print(f"simulate: mean {stats.mean_payoff:.6g} "
          f"(se {stats.std_error:.2g}, dp {dp.value(start):.6g})")
    return _finish(manifest, outdir, started, EXIT_OK)


def cmd_verify(args) -> int:
    started = time.perf_counter()
    space, bias = _load_problem(args)
    if args.field:
        fld = ValueField.from_json(space, args.field)
    else:
        fld = solve(space, bias, _solve_config(args))
    results = run_all(space, fld, bias, VerifyConfig(seed=args.seed or 0))
    outdir = args.output_dir
    os.makedirs(outdir, exist_ok=True)
    outputs = []
    if args.format in ("json", "both"):
        p = os.path.join(outdir, "report.json")
        with open(p, "w") as fh:
            json.dump({r.name: r.to_json_dict() for r in results}, fh,
                      indent=1, sort_keys=True)
            fh.write("\n")
        outputs.append(p)
    if args.format in ("csv", "both"):
        p = os.path.join(outdir, "report.csv")
        with open(p, "w", newline="") as fh:
            fh.write("check,passed,worst_gap,tolerance\n")
            for r in results:
                fh.write(f"{r.name},{int(r.passed)},{r.worst_gap:.17g},"
                         f"{r.tolerance_used:.17g}\n")
        outputs.append(p)
    if args.figures:
        from .plotting import render_report
        outputs.append(render_report(results,
                                     os.path.join(outdir, "report.png")))
    manifest = RunManifest("verify", sys.argv[1:],
                           [args.input or f"preset:{args.preset}",
                            args.field or ""],
                           _bias_dict(bias), {}, outputs, seed=args.seed)
    n_fail = sum(1 for r in results if not r.passed)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"  {r.name:<{width}}  "
              f"{'pass' if r.passed else 'FAIL'}  gap {r.worst_gap:.3e}")
    print(f"verify: {len(results) - n_fail}/{len(results)} checks passed")
    return _finish(manifest, outdir, started, EXIT_OK)


def _add_common(p: argparse.ArgumentParser, figures_default: bool) -> None:
    p.add_argument("--input", help="problem JSON file")
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="built-in problem instead of --input")
    p.add_argument("--output-dir", default="out")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.add_argument("--max-iters", dest="max_iters", type=int,
                   default=10_000_000)
    p.add_argument("--init", default="lambda",
                   help="lambda | psi | const:<v>")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["json", "csv", "both"],
                   default="both")
    p.add_argument("--a", type=float, default=None,
                   help="family parameter of the counterexample-ray preset")
    p.add_argument("--N", dest="n_size", type=int, default=None,
                   help="size parameter of graph/grid presets")
    p.add_argument("--A", dest="cone_slope", type=float, default=None,
                   help="slope of the cone-1d preset")
    p.add_argument("--boundary", default=None,
                   help="boundary preset name for square-2d")
    if figures_default:
        p.add_argument("--no-figures", dest="figures", action="store_false",
                       default=True, help="skip figure rendering")
    else:
        p.add_argument("--figures", action="store_true", default=False,
                       help="also render figures")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bamle",
        description="Biased tug-of-war solver and verification toolkit")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve", help="solve the game equation")
    _add_common(p, figures_default=False)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", help="solve across a parameter axis")
    _add_common(p, figures_default=False)
    p.add_argument("--axis", choices=["beta", "epsilon"], required=True)
    p.add_argument("--values", required=True,
                   help="comma separated ascending values")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("extend", help="write the psi or lambda extension")
    _add_common(p, figures_default=False)
    p.add_argument("--which", choices=["psi", "lambda"], required=True)
    p.set_defaults(fn=cmd_extend)

    p = sub.add_parser("simulate", help="Monte-Carlo episodes")
    _add_common(p, figures_default=False)
    p.add_argument("--start", required=True)
    p.add_argument("--strategy-i", dest="strategy_i", default="greedy")
    p.add_argument("--strategy-ii", dest="strategy_ii", default="greedy")
    p.add_argument("--episodes", type=int, default=10_000)
    p.add_argument("--max-steps", dest="max_steps", type=int,
                   default=1_000_000)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="run the property check battery")
    _add_common(p, figures_default=True)
    p.add_argument("--field", help="field JSON to verify (default: solve)")
    p.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    worker_cap()
    try:
        return args.fn(args)
    except _BadInput:
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
