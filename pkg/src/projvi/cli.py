"""Command-line entry point.

Exit status: 0 on success, 2 for configuration or input errors, 3 when
exact enumeration is refused because the model exceeds the cap.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, EnumerationCapError, ModelFormatError
from .harness import FORMATS, MODES, ExperimentConfig, format_report, run

EXIT_CONFIG = 2
EXIT_CAP = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _pair(kind):
    def parse(text):
        parts = text.replace("x", ",").split(",") if kind is int else text.split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected two values, got {text!r}")
        try:
            return tuple(kind(p) for p in parts)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad value {text!r}") from None

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="projvi", description="Log partition function bounds from mean field with random parity projections.")
    p.add_argument("--mode", required=True, choices=MODES)
    src = p.add_argument_group("model source (exactly one)")
    src.add_argument("--model", dest="model_path", help="model text file")
    src.add_argument("--rbm", dest="rbm_path", help="RBM parameters (.npz with W, b, c)")
    src.add_argument("--grid", type=_pair(int), metavar="RxC", help="generate mixed Ising grids")
    p.add_argument("--grids", type=int, default=1, help="number of generated grids (default 1)")
    p.add_argument("--w-range", type=_pair(float), default=(-10.0, 10.0), metavar="LO,HI")
    p.add_argument("--f-range", type=_pair(float), default=(-1.0, 1.0), metavar="LO,HI")
    p.add_argument("--m", type=int, help="constraint count for --mode mfrp")
    p.add_argument("--m-max", type=int, help="largest m for sweep/compare (default min(n, 20))")
    p.add_argument("--T", type=int, help="projections per level (default 5; wish: the guarantee's minimum)")
    p.add_argument("--J", type=int, default=10, help="random restarts per projection")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-sweeps", type=int, default=1000)
    p.add_argument("--timeout", type=float, help="seconds per ascent")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.0042)
    p.add_argument("--cap", type=int, default=25, help="enumeration cap on variable count")
    p.add_argument("--timing", action="store_true", help="fill wall_ms (reports are then not reproducible)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=FORMATS, default="csv")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExperimentConfig(**vars(args))
    try:
        rows = run(config)
    except EnumerationCapError as exc:
        print(f"projvi: refused: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, ModelFormatError, ValueError) as exc:
        print(f"projvi: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = format_report(rows, config.format)
    if config.out:
        try:
            with open(config.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"projvi: cannot write report: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
