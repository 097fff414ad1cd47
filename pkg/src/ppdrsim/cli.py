"""``ppdrsim`` command line: ``ber``, ``scenario`` and ``oracle``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .config import RunConfig, parse_config
from .errors import ConfigurationError
from .scenario import initial_state, run_scenario, scenario_metrics
from .sweep import ORACLE_KINDS, oracle_ber, run_ber_sweep

CSV_HEADER = "protocol,ebn0_db,trials,bits,bit_errors,ber,stderr"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def fmt(x: float) -> str:
    return f"{x:.10g}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ppdrsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (("ber", "Monte Carlo BER sweep"), ("scenario", "disaster-area scenario run")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--format", choices=("csv", "jsonl"))
    p = sub.add_parser("oracle", help="closed-form BER reference value")
    p.add_argument("kind")
    p.add_argument("ebn0_db", type=float)
    return parser


def ber_lines(cfg: RunConfig) -> List[str]:
    points = run_ber_sweep(cfg.sweep_config(), workers=cfg.workers)
    points = sorted(points, key=lambda p: (p.protocol.value, p.ebn0_db))
    lines = [f"# ppdrsim ber seed={cfg.seed}"]
    if cfg.format == "csv":
        lines.append(CSV_HEADER)
        for p in points:
            lines.append(",".join([p.protocol.value, fmt(p.ebn0_db), str(p.trials), str(p.bits),
                                   str(p.bit_errors), fmt(p.ber), fmt(p.stderr)]))
    else:
        for p in points:
            lines.append(json.dumps({
                "protocol": p.protocol.value, "ebn0_db": float(fmt(p.ebn0_db)), "trials": p.trials,
                "bits": p.bits, "bit_errors": p.bit_errors, "ber": float(fmt(p.ber)),
                "stderr": float(fmt(p.stderr)),
            }))
    return lines


def _round_floats(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    return obj


def scenario_lines(cfg: RunConfig) -> List[str]:
    scfg = cfg.scenario_config()
    lines = [f"# ppdrsim scenario seed={cfg.seed}"]
    final = None
    for state in run_scenario(scfg):
        final = state
        for r in state.records:
            lines.append(json.dumps({
                "step": r.step, "user": r.user, "class": r.cls.value, "state": r.state.value,
                "station": r.station, "bearer": r.bearer.value if r.bearer else None,
                "rate": float(fmt(r.rate)),
            }))
    if final is None:
        final = initial_state(scfg)
    lines.append(json.dumps({"summary": _round_floats(scenario_metrics(final))}))
    return lines


def _emit(lines: List[str], out: Optional[str]):
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "oracle":
        if args.kind not in ORACLE_KINDS:
            print(f"ppdrsim: unknown oracle kind {args.kind!r}; valid kinds: {', '.join(ORACLE_KINDS)}",
                  file=sys.stderr)
            return EXIT_CONFIG
        print(fmt(oracle_ber(args.kind, args.ebn0_db)))
        return EXIT_OK

    try:
        text = None
        if args.config:
            with open(args.config, "rb") as fh:
                text = fh.read()
        overrides = {"command": args.command, "seed": args.seed, "workers": args.workers,
                     "format": args.format, "out": args.out}
        cfg = parse_config(text, overrides)
        if args.command == "ber":
            cfg.sweep_config().validate()
        else:
            cfg.scenario_config().validate()
    except (ConfigurationError, OSError) as exc:
        print(f"ppdrsim: configuration error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        lines = ber_lines(cfg) if cfg.command == "ber" else scenario_lines(cfg)
        _emit(lines, cfg.out)
    except Exception as exc:  # noqa: BLE001
        print(f"ppdrsim: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
