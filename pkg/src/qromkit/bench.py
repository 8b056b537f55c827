"""Sweeps over address width, builder and partition config; CSV in, ratios out."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .qrom import (
    ConfigError, PartitionConfig, QromSpec, build, enumerate_configs, format_config,
    optimal_config, parse_config,
)
from .simulate import STATEVECTOR_QUBIT_CAP, NoiseModel, derive_seed, read_fidelity
from .transpile import CouplingMap, McxStrategy, compile


class ReportError(ValueError):
    """CSV input does not match the sweep schema."""


@dataclass(frozen=True)
class SweepRecord:
    n: int
    builder: str
    config: str
    strategy: str
    wall_time: float | None
    depth: int
    total_gates: int
    qubit_total: int
    overhead_ratio: float
    mean_fidelity: float | None = None


SWEEP_COLUMNS = [f.name for f in fields(SweepRecord)]


def random_table(n: int, d: int, seed: int) -> tuple[int, ...]:
    rng = np.random.default_rng(derive_seed(seed, n, d))
    return tuple(int(w) for w in rng.integers(0, 1 << d, 1 << n))


def parse_range(text: str) -> list[int]:
    """``"2-5"``, ``"2,4,8"`` or ``"3"``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ConfigError(f"empty range {text!r}")
    return out


def configs_for(n: int, mode: str | Sequence[str]) -> list[PartitionConfig]:
    if mode == "optimal":
        return [optimal_config(n)]
    if mode == "all":
        return enumerate_configs(n)
    items = mode.split(",") if isinstance(mode, str) else list(mode)
    return [c for c in (parse_config(s) for s in items) if c.n == n]


def sweep(ns: Iterable[int], builders: Sequence[str], configs: str | Sequence[str] = "optimal",
          strategy: McxStrategy = McxStrategy("recursive"), coupling: CouplingMap | None = None,
          d: int = 4, seed: int = 0, timing: bool = True, shots: int = 0,
          noise: NoiseModel = NoiseModel()) -> list[SweepRecord]:
    """One row per (n, builder, config). Fidelity is filled only when ``shots`` > 0
    and the circuit fits the statevector cap."""
    rows = []
    for n in ns:
        spec = QromSpec(n, random_table(n, d, seed), d)
        jobs: list[tuple[str, PartitionConfig | None]] = []
        for b in builders:
            if b == "predecoded":
                jobs += [(b, c) for c in configs_for(n, configs)]
            else:
                jobs.append((b, None))
        for builder, config in jobs:
            circ = build(spec, builder, config)
            lowered, report = compile(circ, strategy, coupling)
            qubits = circ.num_qubits
            if lowered.has_register("decomp_anc"):
                qubits += lowered.register("decomp_anc").len
            base = n + d + 2
            fid = None
            if shots > 0 and qubits <= STATEVECTOR_QUBIT_CAP:
                fid = read_fidelity(spec, builder, config, strategy, coupling, noise, shots,
                                    seed).mean_fidelity
            rows.append(SweepRecord(
                n=n, builder=builder, config=format_config(config) if config else "-",
                strategy=strategy.name, wall_time=report.wall_time if timing else None,
                depth=report.depth, total_gates=report.total_gates, qubit_total=qubits,
                overhead_ratio=(qubits - base) / base, mean_fidelity=fid,
            ))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def records_to_csv(rows: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in astuple(r)])
    return buf.getvalue()


def _opt_float(text: str) -> float | None:
    return float(text) if text != "" else None


def records_from_csv(text: str) -> list[SweepRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != SWEEP_COLUMNS:
        raise ReportError(f"expected columns {SWEEP_COLUMNS}, got {header}")
    rows = []
    for i, rec in enumerate(reader, 2):
        if not rec:
            continue
        if len(rec) != len(SWEEP_COLUMNS):
            raise ReportError(f"line {i}: expected {len(SWEEP_COLUMNS)} fields")
        try:
            rows.append(SweepRecord(
                int(rec[0]), rec[1], rec[2], rec[3], _opt_float(rec[4]), int(rec[5]), int(rec[6]),
                int(rec[7]), float(rec[8]), _opt_float(rec[9]),
            ))
        except ValueError as exc:
            raise ReportError(f"line {i}: {exc}") from exc
    if not rows:
        raise ReportError("no data rows")
    return rows


# -- fidelity sweep -----------------------------------------------------------

FIDELITY_COLUMNS = ["n", "builder", "config", "connectivity", "seed", "shots", "p2",
                    "mean_fidelity", "std", "reason"]


@dataclass(frozen=True)
class FidelityRow:
    n: int
    builder: str
    config: str
    connectivity: str
    seed: str
    shots: int
    p2: float
    mean_fidelity: float | None
    std: float | None = None
    reason: str = ""


def fidelity_sweep(ns: Iterable[int], builders: Sequence[str], seeds: Sequence[int],
                   coupling: CouplingMap | None = None, connectivity: str = "full",
                   shots: int = 1000, noise: NoiseModel = NoiseModel(),
                   strategy: McxStrategy = McxStrategy("recursive"), d: int = 4,
                   configs: str = "optimal") -> list[FidelityRow]:
    """Per-seed rows, then a ``seed=mean`` summary row (sample std) per (n, builder).

    Seed ``s`` fixes both the stored data table and the shot noise, so rows are
    paired across builders and connectivities.
    """
    if shots < 1:
        raise ConfigError("shots must be positive")
    out = []
    for n in ns:
        for builder in builders:
            cfgs = configs_for(n, configs) if builder == "predecoded" else [None]
            for config in cfgs:
                label = format_config(config) if config else "-"
                vals = []
                for s in seeds:
                    spec = QromSpec(n, random_table(n, d, s), d)
                    circ = build(spec, builder, config)
                    if circ.num_qubits > STATEVECTOR_QUBIT_CAP:
                        out.append(FidelityRow(n, builder, label, connectivity, str(s), shots,
                                               noise.p2, None,
                                               reason=f"{circ.num_qubits} qubits exceeds cap"))
                        continue
                    rep = read_fidelity(spec, builder, config, strategy, coupling, noise, shots, s,
                                        connectivity_label=connectivity)
                    vals.append(rep.mean_fidelity)
                    out.append(FidelityRow(n, builder, label, connectivity, str(s), shots, noise.p2,
                                           rep.mean_fidelity))
                if vals:
                    std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
                    out.append(FidelityRow(n, builder, label, connectivity, "mean", shots, noise.p2,
                                           float(np.mean(vals)), std))
    return out


def fidelity_to_csv(rows: Iterable[FidelityRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIDELITY_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in astuple(r)])
    return buf.getvalue()


def fidelity_summary(rows: Iterable[FidelityRow]) -> dict[tuple[int, str], tuple[float, float]]:
    return {(r.n, r.builder): (r.mean_fidelity, r.std) for r in rows if r.seed == "mean"}


# -- report -------------------------------------------------------------------

def _ratio(a: float, b: float) -> float | None:
    return a / b if b else None


def summarize(rows: Sequence[SweepRecord]) -> dict:
    """Growth ratios per added address line and naive-vs-other reductions."""
    growth = []
    series: dict[tuple[str, str], dict[int, list[SweepRecord]]] = {}
    for r in rows:
        series.setdefault((r.builder, r.strategy), {}).setdefault(r.n, []).append(r)
    for (builder, strategy), by_n in sorted(series.items()):
        ns = sorted(n for n, rs in by_n.items() if len(rs) == 1)
        for lo, hi in zip(ns, ns[1:]):
            if hi != lo + 1:
                continue
            a, b = by_n[lo][0], by_n[hi][0]
            growth.append({
                "builder": builder, "strategy": strategy, "n_from": lo, "n_to": hi,
                "config_from": a.config, "config_to": b.config,
                "gate_ratio": _ratio(b.total_gates, a.total_gates),
                "depth_ratio": _ratio(b.depth, a.depth),
            })
    reduction = []
    best = []
    for (builder, strategy), by_n in sorted(series.items()):
        for n, rs in sorted(by_n.items()):
            top = min(rs, key=lambda r: (r.total_gates, r.depth, r.config))
            best.append({"builder": builder, "strategy": strategy, "n": n, "config": top.config,
                         "total_gates": top.total_gates, "depth": top.depth})
            if builder == "naive":
                continue
            naive = series.get(("naive", strategy), {}).get(n)
            if not naive:
                continue
            base = naive[0]
            for r in rs:
                entry = {
                    "n": n, "builder": builder, "config": r.config, "strategy": strategy,
                    "gate_ratio": _ratio(base.total_gates, r.total_gates),
                    "depth_ratio": _ratio(base.depth, r.depth),
                    "time_ratio": (_ratio(base.wall_time, r.wall_time)
                                   if base.wall_time is not None and r.wall_time else None),
                    "overhead_ratio": r.overhead_ratio,
                }
                reduction.append(entry)
    return {"growth": growth, "reduction": reduction, "best": best}


def render_table(summary: dict) -> str:
    def num(x):
        return "-" if x is None else f"{x:.2f}"

    lines = ["growth per added address line",
             f"{'builder':<11} {'strategy':<9} {'n':>6} {'gates x':>9} {'depth x':>9}"]
    for g in summary["growth"]:
        lines.append(f"{g['builder']:<11} {g['strategy']:<9} {g['n_from']:>2}->{g['n_to']:<2} "
                     f"{num(g['gate_ratio']):>9} {num(g['depth_ratio']):>9}")
    lines += ["", "reduction versus naive",
              f"{'n':>3} {'builder':<11} {'config':<14} {'gates x':>9} {'depth x':>9} "
              f"{'time x':>8} {'overhead':>9}"]
    for r in summary["reduction"]:
        lines.append(f"{r['n']:>3} {r['builder']:<11} {r['config']:<14} {num(r['gate_ratio']):>9} "
                     f"{num(r['depth_ratio']):>9} {num(r['time_ratio']):>8} "
                     f"{100 * r['overhead_ratio']:>8.2f}%")
    lines += ["", "lowest gate count per (builder, n)"]
    for b in summary["best"]:
        lines.append(f"{b['n']:>3} {b['builder']:<11} {b['config']:<14} {b['total_gates']:>10} "
                     f"{b['depth']:>10}")
    lines.append("")
    lines.append("note: data tables are seeded random words; CX fan-out varies with their popcount.")
    return "\n".join(lines) + "\n"


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    return float(np.mean(values)), float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
