"""Command-line entry point: ``lmg-polaron <command> [options]``.

Exit status is 0 on success, 1 for invalid input and 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig, parse_config, parse_config_text
from .errors import NumericalError, ValidationError
from .dissipation import Frame, frame_rates
from .sweeps import (SweepSpec, grid, run_magnetization_grid, run_occupation, run_spectrum,
                     run_sweep, run_wtd)
from .waiting import sample_trajectory


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _range(text: str):
    try:
        a, b, n = text.split(":")
        return float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:steps, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("parameters (override the config file)")
    g.add_argument("--config", help="flat key = value parameter file")
    g.add_argument("--h", type=float)
    g.add_argument("--gamma-x", type=float)
    g.add_argument("--n-spins", type=int)
    g.add_argument("--eta", type=float)
    g.add_argument("--omega-c", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--frame", choices=["bms", "polaron", "both"])
    g.add_argument("--density", choices=["bare", "displacement"],
                   help="reservoir density used for polaron-frame rates")
    g.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file (default: stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    table_fmt = argparse.ArgumentParser(add_help=False)
    table_fmt.add_argument("--format", choices=["csv", "json"], default="csv")

    ap = _Parser(prog="lmg-polaron", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("spectrum", parents=[common, table_fmt], help="lowest energies vs gamma_x")
    s.add_argument("--gamma-range", type=_range, default=(0.0, 2.0, 41))
    s.add_argument("--k", type=int, default=3)

    s = sub.add_parser("magnetization", parents=[common, table_fmt],
                       help="<Jz>/N on a beta x gamma_x grid")
    s.add_argument("--gamma-range", type=_range, default=(0.0, 2.0, 21))
    s.add_argument("--beta-range", type=_range, default=(0.5, 10.0, 20))

    s = sub.add_parser("occupation", parents=[common, table_fmt],
                       help="frequency and stationary occupations vs gamma_x")
    s.add_argument("--gamma-range", type=_range, default=(0.0, 2.0, 201))

    s = sub.add_parser("wtd", parents=[common, table_fmt], help="waiting-time densities")
    cut = s.add_mutually_exclusive_group()
    cut.add_argument("--tau-range", type=_range)
    cut.add_argument("--gamma-range", type=_range)
    s.add_argument("--tau", type=float, default=0.0, help="fixed tau for a gamma_x cut")
    s.add_argument("--kinds", default="ee,ae,ea,aa")
    s.add_argument("--mode", choices=["analytic", "numeric", "trajectory"], default="analytic")
    s.add_argument("--n-jumps", type=int, default=10**6)

    s = sub.add_parser("trajectory", parents=[common], help="sample a jump record")
    s.add_argument("--n-jumps", type=int, default=10**5)
    s.add_argument("--format", choices=["csv", "binary"], default="csv")

    s = sub.add_parser("sweep", parents=[common, table_fmt], help="generic one-parameter sweep")
    s.add_argument("--variable", choices=["gamma_x", "temperature", "tau"], default="gamma_x")
    s.add_argument("--range", type=_range, default=(0.0, 2.0, 101))
    s.add_argument("--outputs", default="omega,occupation_diag,occupation_mode")
    s.add_argument("--tau", type=float, default=0.0)
    s.add_argument("--workers", type=int, default=1)
    return ap


_FIELDS = ("h", "gamma_x", "n_spins", "eta", "omega_c", "beta", "frame", "density", "seed")


def resolve_config(args) -> RunConfig:
    overrides = {k: getattr(args, k) for k in _FIELDS if getattr(args, k, None) is not None}
    if args.config:
        return parse_config(args.config, overrides)
    return parse_config_text("", overrides=overrides)


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def run(argv=None) -> None:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    h = cfg.h
    frame = cfg.frame

    if args.command == "trajectory":
        f = "polaron" if frame == "both" else frame
        kw = {"density": cfg.density} if f == "polaron" else {}
        rec = sample_trajectory(frame_rates(Frame(f), h, cfg.gamma_x, cfg.bath, **kw),
                                args.n_jumps, cfg.seed)
        if args.out is None:
            raise ValidationError("trajectory output needs --out")
        rec.to_binary(args.out) if args.format == "binary" else rec.to_csv(args.out)
        return

    def scaled(r):
        a, b, n = r
        return grid(a * h, b * h, n)

    if args.command == "spectrum":
        table = run_spectrum(cfg, scaled(args.gamma_range), args.k)
    elif args.command == "magnetization":
        a, b, n = args.beta_range
        table = run_magnetization_grid(cfg, grid(a / h, b / h, n), scaled(args.gamma_range))
    elif args.command == "occupation":
        table = run_occupation(cfg, scaled(args.gamma_range), frame)
    elif args.command == "wtd":
        f = "polaron" if frame == "both" else frame
        kinds = [k.strip() for k in args.kinds.split(",")]
        if args.gamma_range is not None:
            table = run_wtd(cfg, kinds, gammas=scaled(args.gamma_range), tau=args.tau / h,
                            mode=args.mode, frame=f)
        elif args.mode == "trajectory":
            table = run_wtd(cfg, kinds, mode="trajectory", frame=f, n_jumps=args.n_jumps)
        else:
            a, b, n = args.tau_range or (0.0, 100.0, 201)
            table = run_wtd(cfg, kinds, taus=grid(a / h, b / h, n), mode=args.mode, frame=f)
    else:
        a, b, n = args.range
        spec = SweepSpec(args.variable, a, b, n, cfg,
                         tuple(o.strip() for o in args.outputs.split(",")), frame, args.tau)
        table = run_sweep(spec, args.workers)

    table = table.stamped()
    _emit(table.to_json() + "\n" if args.format == "json" else table.to_csv(), args.out)


def main(argv=None) -> int:
    try:
        run(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
