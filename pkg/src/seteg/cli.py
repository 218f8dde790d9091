"""Command-line front end: ``seteg {curves,optimize,simulate,verify-bound,check-yield}``.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
Artifacts are byte-deterministic: no timestamps, sorted JSON keys, fixed float format.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from . import __version__
from .analytic_bounds import (
    ChannelSpec,
    curve_point,
    default_t_grid,
    loss_exponent,
    optimum,
    rnpm_point,
    sort_rows,
)
from .errors import BoundViolated, InvalidParameter, NonConvexSpec, SetegError
from .fock_sim import ArmParams, matched_beta, simulate_p2p, simulate_three_party
from .separable_search import SearchConfig, search
from .yield_functions import parse_yield, verify_yield_contract

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3
FLOAT_FMT = ".12g"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument types (range-checked before dispatch)


def _number(lo=None, hi=None, lo_open=True, hi_open=True, kind=float):
    def parse(text: str):
        try:
            val = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}")
        if kind is float and not math.isfinite(val):
            raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
        if lo is not None and (val < lo or (lo_open and val == lo)):
            raise argparse.ArgumentTypeError(f"{text} is below the allowed range")
        if hi is not None and (val > hi or (hi_open and val == hi)):
            raise argparse.ArgumentTypeError(f"{text} is above the allowed range")
        return val

    return parse


unit_open = _number(0.0, 1.0)
unit_half_open = _number(0.0, 1.0, hi_open=False)
positive = _number(0.0)
non_negative = _number(0.0, lo_open=False)
angle = _number()
positive_int = _number(1, lo_open=False, kind=int)
non_negative_int = _number(0, lo_open=False, kind=int)


def _yield_spec(text: str):
    try:
        parse_yield(text)
    except (InvalidParameter, NonConvexSpec) as exc:
        raise argparse.ArgumentTypeError(str(exc))
    return text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seteg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"seteg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curves", help="figure curves as CSV")
    p.add_argument("--figure", choices=["fig3", "fig6"], required=True)
    p.add_argument("--t", type=unit_open, help="single transmittance")
    p.add_argument("--t-min", type=unit_open, default=0.01)
    p.add_argument("--t-max", type=unit_open, default=0.99)
    p.add_argument("--t-points", type=positive_int, default=200)
    p.add_argument("--jobs", type=positive_int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("optimize", help="optimal yield over the overlap u")
    p.add_argument("--yield", dest="yield_spec", type=_yield_spec, required=True)
    _channel_flags(p)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="Fock-space simulation of the optimal protocol")
    p.add_argument("--protocol", choices=["p2p", "three-party"], required=True)
    p.add_argument("--alpha", type=non_negative, required=True)
    p.add_argument("--beta", type=non_negative, help="Bob's amplitude (default: matched overlap)")
    p.add_argument("--theta", type=angle, required=True)
    _channel_flags(p)
    p.add_argument("--q0", type=unit_open, default=0.5)
    p.add_argument("--dim", type=_number(2, lo_open=False, kind=int))
    p.add_argument("--out")

    p = sub.add_parser("verify-bound", help="search separable protocols against the bound")
    p.add_argument("--yield", dest="yield_spec", type=_yield_spec, required=True)
    p.add_argument("--overlap", type=unit_open, required=True)
    p.add_argument("--dephase", type=unit_open, required=True)
    p.add_argument("--outcomes", type=positive_int, default=SearchConfig.outcomes)
    p.add_argument("--restarts", type=positive_int, default=SearchConfig.restarts)
    p.add_argument("--iterations", type=non_negative_int, default=SearchConfig.iterations)
    p.add_argument("--seed", type=non_negative_int, default=SearchConfig.seed)
    p.add_argument("--out")

    p = sub.add_parser("check-yield", help="sample the yield contract")
    p.add_argument("--yield", dest="yield_spec", type=_yield_spec, required=True)
    p.add_argument("--grid", type=_number(8, lo_open=False, kind=int), default=64)
    p.add_argument("--segments", type=_number(100, lo_open=False, kind=int), default=2000)
    p.add_argument("--seed", type=non_negative_int, default=0)
    p.add_argument("--out")
    return parser


def _channel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--transmittance", type=unit_open)
    p.add_argument("--ta", type=unit_open)
    p.add_argument("--tb", type=unit_open)


def _channel(args, three_party: bool | None = None) -> ChannelSpec:
    """--transmittance alone, or --ta with --tb.

    For a three-party run --transmittance T means a symmetric relay with
    end-to-end transmittance T (each arm sqrt(T)).
    """
    arms = (args.ta, args.tb)
    if args.transmittance is not None:
        if any(a is not None for a in arms):
            raise UsageError("--transmittance cannot be combined with --ta/--tb")
        if three_party:
            return ChannelSpec.relay(args.transmittance)
        return ChannelSpec.point_to_point(args.transmittance)
    if None in arms:
        raise UsageError("give --transmittance, or both --ta and --tb")
    if three_party is False:
        raise UsageError("--ta/--tb need --protocol three-party")
    return ChannelSpec.three_party(*arms)


# ---------------------------------------------------------------------------
# artifacts


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def render_json(command: str, params: dict, result: dict, seed: int | None = None) -> str:
    body = {
        "tool": "seteg",
        "version": __version__,
        "command": command,
        "params": params,
        "seed": seed,
        "result": result,
    }
    body["content_sha256"] = _sha256(json.dumps(body, sort_keys=True))
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def render_csv(command: str, params: dict, rows) -> str:
    lines = ["T,curve,value"]
    lines += [f"{format(r.T, FLOAT_FMT)},{r.curve},{format(r.value, FLOAT_FMT)}" for r in rows]
    data = "\n".join(lines) + "\n"
    header = [
        f"# seteg {__version__} {command}",
        "# params " + json.dumps(params, sort_keys=True),
        f"# content_sha256 {_sha256(data)}",
    ]
    return "\n".join(header) + "\n" + data


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _curves(args) -> int:
    if args.t is not None:
        grid = [args.t]
        params = {"figure": args.figure, "t": args.t}
    else:
        if args.t_min >= args.t_max and args.t_points > 1:
            raise UsageError("--t-min must be below --t-max")
        grid = default_t_grid(args.t_points, args.t_min, args.t_max)
        params = {"figure": args.figure, "t_min": args.t_min, "t_max": args.t_max, "t_points": args.t_points}
    figures = [args.figure] * len(grid)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            chunks = list(pool.map(curve_point, figures, grid))
    else:
        chunks = list(map(curve_point, figures, grid))
    rows = sort_rows(r for chunk in chunks for r in chunk)
    _emit(render_csv("curves", params, rows), args.out)
    return EXIT_OK


def _optimize(args) -> int:
    channel = _channel(args)
    Y = parse_yield(args.yield_spec)
    g = loss_exponent(channel)
    res = optimum(Y, g)
    fidelity, success = rnpm_point(res.u_star, g)
    params = {
        "yield": args.yield_spec,
        "channel": {"kind": channel.kind, "T": channel.T, "Ta": channel.Ta, "Tb": channel.Tb},
    }
    result = {
        "gamma": g.gamma,
        "u_star": res.u_star,
        "value": res.value,
        "fidelity": fidelity,
        "success_probability": success,
        "evaluations": res.evaluations,
    }
    _emit(render_json("optimize", params, result), args.out)
    return EXIT_OK


def _simulate(args) -> int:
    three = args.protocol == "three-party"
    channel = _channel(args, three_party=three)
    if three:
        beta = args.beta if args.beta is not None else matched_beta(args.alpha, channel.Ta, channel.Tb)
        arm_a = ArmParams(args.alpha, args.theta, channel.Ta, args.q0)
        arm_b = ArmParams(beta, args.theta, channel.Tb, args.q0)
        dims = (args.dim, args.dim) if args.dim else None
        report = simulate_three_party(arm_a, arm_b, dims)
    else:
        if args.beta is not None:
            raise UsageError("--beta applies to --protocol three-party only")
        beta = None
        report = simulate_p2p(args.alpha, args.theta, channel.T, q0=args.q0, dim=args.dim)
    params = {
        "protocol": args.protocol,
        "alpha": args.alpha,
        "beta": beta,
        "theta": args.theta,
        "q0": args.q0,
        "dim": args.dim,
        "channel": {"kind": channel.kind, "T": channel.T, "Ta": channel.Ta, "Tb": channel.Tb},
    }
    _emit(render_json("simulate", params, report.to_dict()), args.out)
    return EXIT_OK


def _verify_bound(args) -> int:
    Y = parse_yield(args.yield_spec)
    cfg = SearchConfig(args.outcomes, args.restarts, args.iterations, args.seed)
    params = {
        "yield": args.yield_spec,
        "overlap": args.overlap,
        "dephase": args.dephase,
        "outcomes": cfg.outcomes,
        "restarts": cfg.restarts,
        "iterations": cfg.iterations,
        "step": cfg.step,
        "step_decay": cfg.step_decay,
        "decay_every": cfg.decay_every,
    }
    result = search(Y, args.overlap, args.dephase, cfg)
    _emit(render_json("verify-bound", params, result.to_dict(), seed=cfg.seed), args.out)
    return EXIT_OK


def _check_yield(args) -> int:
    Y = parse_yield(args.yield_spec)
    report = verify_yield_contract(Y, grid_n=args.grid, segment_samples=args.segments, seed=args.seed)
    params = {"yield": args.yield_spec, "grid": args.grid, "segments": args.segments}
    _emit(render_json("check-yield", params, report.to_dict(), seed=args.seed), args.out)
    return EXIT_OK


COMMANDS = {
    "curves": _curves,
    "optimize": _optimize,
    "simulate": _simulate,
    "verify-bound": _verify_bound,
    "check-yield": _check_yield,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (InvalidParameter, NonConvexSpec) as exc:
        print(f"seteg: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BoundViolated as exc:
        print(f"seteg: bound violated: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SetegError, ArithmeticError, ValueError) as exc:
        print(f"seteg: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
