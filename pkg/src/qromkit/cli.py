"""``qromkit`` command line: build, sweep, fidelity, report."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .circuit import dumps
from .qrom import BUILDERS, QromSpec, build
from .simulate import NoiseModel
from .transpile import CouplingMap, McxStrategy, compile

EXIT_INVALID = 2


def _coupling(value: str | None) -> tuple[CouplingMap | None, str]:
    if value is None or value == "full":
        return None, "full"
    if value == "heavy-hex":
        return CouplingMap.heavy_hex_27(), "heavy-hex"
    return CouplingMap.from_file(value), Path(value).name


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _builders(text: str) -> list[str]:
    names = [b.strip() for b in text.split(",") if b.strip()]
    for b in names:
        if b not in BUILDERS:
            raise ValueError(f"unknown builder {b!r}")
    return names


def cmd_build(args) -> int:
    spec = QromSpec.from_dict(json.loads(Path(args.spec).read_text()))
    circ = build(spec, args.builder, args.config, args.uncompute)
    if args.lower or args.coupling:
        coupling, _ = _coupling(args.coupling)
        circ, _ = compile(circ, McxStrategy.parse(args.mcx), coupling)
    _emit(dumps(circ) + "\n", args.out)
    return 0


def cmd_sweep(args) -> int:
    coupling, _ = _coupling(args.coupling)
    rows = bench.sweep(
        bench.parse_range(args.n), _builders(args.builders), args.configs,
        McxStrategy.parse(args.mcx), coupling, d=args.d, seed=args.seed,
        timing=not args.no_timing, shots=args.shots, noise=NoiseModel(args.p1, args.p2),
    )
    _emit(bench.records_to_csv(rows), args.out)
    return 0


def cmd_fidelity(args) -> int:
    if args.shots < 1:
        raise ValueError("--shots must be positive")
    coupling, label = _coupling(args.connectivity)
    seeds = bench.parse_range(args.seeds) if args.seeds else [args.seed]
    rows = bench.fidelity_sweep(
        bench.parse_range(args.n), _builders(args.builders), seeds, coupling, label,
        args.shots, NoiseModel(args.p1, args.p2), McxStrategy.parse(args.mcx), d=args.d,
        configs=args.configs,
    )
    _emit(bench.fidelity_to_csv(rows), args.out)
    return 0


def cmd_report(args) -> int:
    rows = bench.records_from_csv(Path(args.csv).read_text(encoding="utf-8"))
    summary = bench.summarize(rows)
    if args.format == "json":
        _emit(json.dumps(summary, indent=2) + "\n", args.out)
    else:
        _emit(bench.render_table(summary), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qromkit", description="QROM circuit builder and benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, shots_default: int) -> None:
        sp.add_argument("--mcx", choices=["recursive", "vchain"], default="recursive")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--shots", type=int, default=shots_default)
        sp.add_argument("--p1", type=float, default=0.0)
        sp.add_argument("--p2", type=float, default=0.001)
        sp.add_argument("--out")
        sp.add_argument("-d", type=int, default=4, help="data word width")

    b = sub.add_parser("build", help="build one QROM circuit and write it as JSON")
    b.add_argument("spec", help="JSON file {n, d, data}")
    b.add_argument("--builder", choices=BUILDERS, default="naive")
    b.add_argument("--config")
    b.add_argument("--uncompute", choices=["mirror", "reset"])
    b.add_argument("--lower", action="store_true", help="lower to basis gates")
    b.add_argument("--coupling", help="coupling-map file (implies --lower)")
    b.add_argument("--mcx", choices=["recursive", "vchain"], default="recursive")
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("sweep", help="compile metrics over n, builder and config")
    s.add_argument("--n", default="2-8", help="range, e.g. 2-8 or 2,4,8")
    s.add_argument("--builders", default="naive,predecoded")
    s.add_argument("--configs", default="optimal", help="optimal, all, or comma-separated list")
    s.add_argument("--coupling")
    s.add_argument("--no-timing", action="store_true", help="leave wall_time blank")
    common(s, 0)
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fidelity", help="noisy read-back fidelity per seed")
    f.add_argument("--n", default="2-5")
    f.add_argument("--builders", default="sawtooth,predecoded")
    f.add_argument("--configs", default="optimal")
    f.add_argument("--connectivity", default="full", help="full, heavy-hex or a coupling file")
    f.add_argument("--seeds", help="range of seeds, e.g. 0-4 (defaults to --seed)")
    common(f, 1000)
    f.set_defaults(func=cmd_fidelity)

    r = sub.add_parser("report", help="summarize a sweep CSV")
    r.add_argument("csv")
    r.add_argument("--format", choices=["table", "json"], default="table")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"qromkit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
