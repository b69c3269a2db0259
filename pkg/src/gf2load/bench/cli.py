"""``gf2load`` command line entry point.

Exit codes: 0 success, 2 configuration error, 3 failed ``--check``.
"""

from __future__ import annotations

import argparse
import os
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment
from .report import emit_report

EXIT_CONFIG = 2
EXIT_CHECK = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_r_grid(text: str) -> tuple[float, ...]:
    """``a:b:step`` (inclusive of b) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(round((b - a) / step))
            return tuple(a + i * step for i in range(n + 1))
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad r grid {text!r}; expected a:b:step") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gf2load", description="Linear hashing max-load experiments over GF(2).")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--u", type=int, default=24, help="key dimension")
    p.add_argument("--l", type=int, default=10, help="bucket dimension (n = 2^l bins)")
    p.add_argument("--m", type=int, default=None, help="number of balls (default n)")
    p.add_argument("--family", default="random-distinct", help="ball set family")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--r-grid", type=parse_r_grid, default="6:12:1")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--surjective", action="store_true", help="sample surjective hashes")
    p.add_argument("--base", type=float, default=None, help="potential base (default ln n)")
    p.add_argument("--candidates", type=int, default=32)
    p.add_argument("--exhaustive-threshold", type=int, default=1 << 20)
    p.add_argument("--x0", type=float, default=1.001, help="tail-lemma: X_0")
    p.add_argument("--t", type=float, default=1.01, help="tail-lemma: threshold base t")
    p.add_argument("--k", type=int, default=10, help="tail-lemma: sequence length")
    p.add_argument("--check", action="store_true", help="exit 3 if any acceptance check fails")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig(
            experiment=args.experiment,
            u=args.u,
            l=args.l,
            m=(1 << args.l) if args.m is None else args.m,
            set_family=args.family,
            trials=args.trials,
            master_seed=args.seed,
            r_grid=args.r_grid if isinstance(args.r_grid, tuple) else parse_r_grid(args.r_grid),
            epsilon=args.epsilon,
            surjective=args.surjective,
            base=args.base,
            candidates=args.candidates,
            exhaustive_threshold=args.exhaustive_threshold,
            x0=args.x0,
            t=args.t,
            k=args.k,
        )
    except (ConfigError, ValueError) as e:
        print(f"gf2load: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    report = run_experiment(cfg)
    try:
        text = emit_report(report, args.format, args.out)
    except OSError as e:
        print(f"gf2load: cannot write report: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out is None:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the flush at exit
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    if args.check:
        for name, ok in report.checks.items():
            print(f"{'PASS' if ok else 'FAIL'} {name}", file=sys.stderr)
        if not report.passed:
            return EXIT_CHECK
    return 0


if __name__ == "__main__":
    sys.exit(main())
