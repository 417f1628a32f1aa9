"""Command-line entry point: ``wagering {efficiency,variance,verify,game}``.

Exit codes: 0 success, 1 an asserted property failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConfigError, WageringError
from .experiments import (
    efficiency_csv,
    run_efficiency_sweep,
    run_variance_sweep,
    run_verify,
    variance_csv,
    verify_json,
)
from .mechanisms import distribution, parse_mechanism, sample
from .scoring import RULES
from .types import GameInstance

DEFAULTS = {
    "efficiency": {},
    "variance": {"instances": 10000, "mechanisms": ("RP-SWME", "LWS")},
    "verify": {"instances": 20, "n_min": 2, "n_max": 6, "n_step": 1, "mechanisms": ("LWS", "SWME", "RP-SWME")},
}


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wagering", description="Randomized wagering mechanism simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--threads", type=_positive, help="worker threads")
        p.add_argument("--sample-cap", type=_positive, dest="sample_cap", help="samples per outcome when exact enumeration is capped")
        p.add_argument("--mechanisms", help="comma-separated mechanism list")
        p.add_argument("--n-min", type=int, dest="n_min")
        p.add_argument("--n-max", type=int, dest="n_max")
        p.add_argument("--n-step", type=int, dest="n_step")
        p.add_argument("--instances", type=_positive)
        p.add_argument("--pred-model", dest="pred_model")
        p.add_argument("--wager-model", dest="wager_model")
        p.add_argument("-m", type=int, dest="m", help="number of outcomes")

    common(sub.add_parser("efficiency", help="average individual risk and money exchange rate versus N"))
    common(sub.add_parser("variance", help="payoff spread and chance of not losing by accuracy bin"))
    common(sub.add_parser("verify", help="run the property battery"))

    game = sub.add_parser("game", help="payoffs of one game")
    game.add_argument("--reports", type=_floats, required=True, help="P(X=1) per agent, comma-separated")
    game.add_argument("--wagers", type=_floats, required=True)
    game.add_argument("--outcome", type=int, required=True)
    game.add_argument("--mechanism", required=True)
    game.add_argument("--rule", choices=sorted(RULES), default="brier")
    game.add_argument("--seed", type=_u64, help="draw one realization with this seed instead of printing the distribution")
    return parser


def _overrides(args) -> dict:
    keys = ("seed", "out", "threads", "sample_cap", "n_min", "n_max", "n_step", "instances", "pred_model", "wager_model", "m")
    values = {k: getattr(args, k) for k in keys}
    if args.mechanisms is not None:
        from .config import coerce

        values["mechanisms"] = coerce("mechanisms", args.mechanisms)
    return values


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)


def format_game(args) -> str:
    mid = parse_mechanism(args.mechanism)
    rule = RULES[args.rule]
    g = GameInstance.binary(args.reports, args.wagers, outcome=args.outcome)
    fmt = lambda v: np.array2string(np.asarray(v), precision=12, separator=", ")  # noqa: E731
    if args.seed is not None:
        rng = np.random.default_rng(args.seed)
        return f"{mid.label} realization (seed {args.seed}): {fmt(sample(mid, g, rng, rule))}\n"
    d = distribution(mid, g, rule)
    lines = [f"{mid.label}: {len(d)}-point support"]
    for p, row in zip(d.probs, d.payoffs):
        lines.append(f"  prob {p:.12g}  payoffs {fmt(row)}")
    lines.append(f"  expected {fmt(d.expectation())}")
    lines.append(f"  worst    {fmt(d.min_payoff())}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "game":
            sys.stdout.write(format_game(args))
            return 0
        cfg = load_config(args.config, DEFAULTS[args.command], **_overrides(args))
        if args.command == "efficiency":
            _emit(efficiency_csv(run_efficiency_sweep(cfg)), cfg.out)
            return 0
        if args.command == "variance":
            _emit(variance_csv(run_variance_sweep(cfg)), cfg.out)
            return 0
        reports, code = run_verify(cfg)
        for r in reports:
            print(r, file=sys.stderr)
            if not r.passed:
                print(f"    witness: {r.witness}", file=sys.stderr)
        _emit(verify_json(reports), cfg.out)
        return code
    except ConfigError as exc:
        print(f"wagering: config error: {exc}", file=sys.stderr)
        return 2
    except WageringError as exc:
        print(f"wagering: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
