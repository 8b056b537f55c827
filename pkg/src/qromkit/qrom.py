"""QROM circuit families: naive multi-controlled, sawtooth ladder, pre-decoded.

Address value ``a`` sets address qubit ``i`` to bit ``i`` of ``a``. Address
lines are consumed MSB-first wherever an ordering matters (ladder order,
partition groups, minterm indices).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .circuit import CCX, CX, RESET, X, Circuit, MCX


class ConfigError(ValueError):
    """Bad QROM spec, partition config or builder arguments."""


class Uncompute(str, Enum):
    MIRROR = "mirror"
    RESET = "reset"


@dataclass(frozen=True)
class QromSpec:
    n: int
    data: tuple[int, ...]
    d: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", tuple(int(w) for w in self.data))
        if self.n < 1:
            raise ConfigError("need at least one address line")
        if self.d < 1:
            raise ConfigError("need at least one data line")
        if len(self.data) != 1 << self.n:
            raise ConfigError(f"expected {1 << self.n} data words, got {len(self.data)}")
        for w in self.data:
            if not 0 <= w < 1 << self.d:
                raise ConfigError(f"data word {w} does not fit in {self.d} bits")

    @classmethod
    def from_dict(cls, obj: dict) -> "QromSpec":
        try:
            return cls(n=int(obj["n"]), d=int(obj.get("d", 4)), data=tuple(obj["data"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad QROM spec: {exc}") from exc


@dataclass(frozen=True)
class Group:
    size: int
    predecoded: bool

    def __str__(self) -> str:
        return f"{self.size}{'P' if self.predecoded else 'U'}"


@dataclass(frozen=True)
class PartitionConfig:
    groups: tuple[Group, ...]

    @property
    def n(self) -> int:
        return sum(g.size for g in self.groups)

    def __str__(self) -> str:
        return format_config(self)

    def normalized(self) -> "PartitionConfig":
        """P groups by descending size, then undecoded lines as 1U singletons."""
        ps = sorted((g.size for g in self.groups if g.predecoded), reverse=True)
        us = sum(g.size for g in self.groups if not g.predecoded)
        return PartitionConfig(tuple(Group(s, True) for s in ps) + (Group(1, False),) * us)


_TOKEN = re.compile(r"^\s*(\d+)\s*\(?\s*([PpUu])\s*\)?\s*$")


def parse_config(text: str) -> PartitionConfig:
    """Parse ``"2P+2P+1U"`` (case-insensitive; ``2(P)`` also accepted)."""
    groups = []
    for tok in text.split("+"):
        m = _TOKEN.match(tok)
        if not m:
            raise ConfigError(f"malformed config token {tok!r} in {text!r}")
        size = int(m.group(1))
        if size == 0:
            raise ConfigError(f"zero-size group in {text!r}")
        groups.append(Group(size, m.group(2).upper() == "P"))
    return PartitionConfig(tuple(groups))


def format_config(config: PartitionConfig) -> str:
    return "+".join(str(g) for g in config.groups)


def optimal_config(n: int) -> PartitionConfig:
    """Balanced two-way pre-decode: ceil(n/2)P + floor(n/2)P (just 1P for n=1)."""
    hi, lo = (n + 1) // 2, n // 2
    return PartitionConfig(tuple(Group(s, True) for s in (hi, lo) if s))


def _partitions(total: int, largest: int):
    if total == 0:
        yield ()
        return
    for first in range(min(total, largest), 0, -1):
        for rest in _partitions(total - first, first):
            yield (first,) + rest


def enumerate_configs(n: int) -> list[PartitionConfig]:
    """Every distinct partition config of ``n`` lines, undecoded lines as singletons.

    Sorted by number of undecoded lines, then number of P groups, then
    descending P sizes.
    """
    if not 1 <= n <= 12:
        raise ConfigError("enumerate_configs supports 1 <= n <= 12")
    out = []
    for u in range(n + 1):
        for ps in _partitions(n - u, n - u):
            out.append(PartitionConfig(tuple(Group(s, True) for s in ps) + (Group(1, False),) * u))
    return sorted(out, key=lambda c: (sum(not g.predecoded for g in c.groups),
                                      sum(g.predecoded for g in c.groups),
                                      tuple(-g.size for g in c.groups)))


# -- builders -----------------------------------------------------------------

def _addr_lines_msb(circ: Circuit) -> list[int]:
    return circ.register("address").qubits[::-1]


def _flip_zero_bits(circ: Circuit, lines_msb: Sequence[int], value: int) -> None:
    width = len(lines_msb)
    for j, q in enumerate(lines_msb):
        if not (value >> (width - 1 - j)) & 1:
            circ.append(X, [q])


def _fan_out(circ: Circuit, word: int) -> None:
    ctrl = circ.register("cnot_ctrl")[0]
    data = circ.register("data")
    for j in range(data.len):
        if (word >> j) & 1:
            circ.append(CX, [ctrl, data[j]])


def _uncompute_mode(options: Uncompute | str | None, default: Uncompute) -> Uncompute:
    return default if options is None else Uncompute(options)


def build_naive(spec: QromSpec, uncompute: Uncompute | str | None = None) -> Circuit:
    """One X-conjugated MCX(n+1) per address, targeting the CNOT-control line."""
    mode = _uncompute_mode(uncompute, Uncompute.MIRROR)
    circ = Circuit.from_sizes([("read", 1), ("address", spec.n), ("cnot_ctrl", 1), ("data", spec.d)])
    read = circ.register("read")[0]
    ctrl = circ.register("cnot_ctrl")[0]
    lines = _addr_lines_msb(circ)
    mcx = MCX(spec.n + 1)
    qubits = [read, *lines, ctrl]

    def select(a: int) -> None:
        _flip_zero_bits(circ, lines, a)
        circ.append(mcx, qubits)
        _flip_zero_bits(circ, lines, a)

    for a, word in enumerate(spec.data):
        select(a)
        _fan_out(circ, word)
        if mode is Uncompute.MIRROR:
            select(a)
        else:
            circ.append(RESET, [ctrl])
    return circ


def build_sawtooth(spec: QromSpec, uncompute: Uncompute | str | None = None) -> Circuit:
    """Toffoli ladder over interleaved ancilla, rebuilt for every address.

    With a single address line there is no ladder and the naive circuit is
    returned.
    """
    mode = _uncompute_mode(uncompute, Uncompute.MIRROR)
    if spec.n < 2:
        return build_naive(spec, mode)
    circ = Circuit.from_sizes([("read", 1), ("address", spec.n), ("ladder_anc", spec.n - 1),
                               ("cnot_ctrl", 1), ("data", spec.d)])
    read = circ.register("read")[0]
    ctrl = circ.register("cnot_ctrl")[0]
    anc = circ.register("ladder_anc").qubits
    lines = _addr_lines_msb(circ)
    ladder = [(read, lines[0], anc[0])]
    for i in range(1, spec.n - 1):
        ladder.append((anc[i - 1], lines[i], anc[i]))
    ladder.append((anc[-1], lines[-1], ctrl))

    for a, word in enumerate(spec.data):
        _flip_zero_bits(circ, lines, a)
        for rung in ladder:
            circ.append(CCX, rung)
        _flip_zero_bits(circ, lines, a)
        _fan_out(circ, word)
        if mode is Uncompute.MIRROR:
            _flip_zero_bits(circ, lines, a)
            for rung in reversed(ladder):
                circ.append(CCX, rung)
            _flip_zero_bits(circ, lines, a)
        else:
            circ.append(RESET, [ctrl])
            for q in anc:
                circ.append(RESET, [q])
    return circ


def _predecode_stage(circ: Circuit, groups) -> list:
    """Emit minterm generation for every P group; return the gates emitted."""
    emitted = []
    for lines, anc in groups:
        m = len(lines)
        for v in range(1 << m):
            flips = [q for j, q in enumerate(lines) if not (v >> (m - 1 - j)) & 1]
            emitted += [(X, [q]) for q in flips]
            emitted.append((MCX(m), [*lines, anc[v]]))
            emitted += [(X, [q]) for q in flips]
    circ.extend(emitted)
    return emitted


def build_predecoded(spec: QromSpec, config: PartitionConfig | str,
                     uncompute: Uncompute | str | None = None) -> Circuit:
    """Pre-decode P groups onto 2**m ancilla each, then select with one control per group.

    Pre-decoded ancilla stay live across all addresses and are cleared once at
    the end (RESET) or by mirroring the pre-decode stage (MIRROR).
    """
    if isinstance(config, str):
        config = parse_config(config)
    if config.n != spec.n:
        raise ConfigError(f"config {format_config(config)} covers {config.n} lines, spec has {spec.n}")
    mode = _uncompute_mode(uncompute, Uncompute.RESET)

    sizes = [("read", 1), ("address", spec.n)]
    p_index = 0
    for g in config.groups:
        if g.predecoded:
            sizes.append((f"predecode_anc[{p_index}]", 1 << g.size))
            p_index += 1
    sizes += [("cnot_ctrl", 1), ("data", spec.d)]
    circ = Circuit.from_sizes(sizes)
    read = circ.register("read")[0]
    ctrl = circ.register("cnot_ctrl")[0]
    lines = _addr_lines_msb(circ)

    # (lines, ancilla, first bit position from MSB) per P group; undecoded line positions
    p_groups, u_lines = [], []
    pos, p_index = 0, 0
    for g in config.groups:
        glines = lines[pos:pos + g.size]
        if g.predecoded:
            p_groups.append((glines, circ.register(f"predecode_anc[{p_index}]").qubits, pos))
            p_index += 1
        else:
            u_lines += [(q, pos + j) for j, q in enumerate(glines)]
        pos += g.size

    stage1 = _predecode_stage(circ, [(gl, anc) for gl, anc, _ in p_groups])
    n = spec.n
    for a, word in enumerate(spec.data):
        controls = [read]
        for glines, anc, start in p_groups:
            v = (a >> (n - start - len(glines))) & ((1 << len(glines)) - 1)
            controls.append(anc[v])
        flips = []
        for q, msb_pos in u_lines:
            controls.append(q)
            if not (a >> (n - 1 - msb_pos)) & 1:
                flips.append(q)
        mcx = MCX(len(controls))

        def select() -> None:
            for q in flips:
                circ.append(X, [q])
            circ.append(mcx, [*controls, ctrl])
            for q in flips:
                circ.append(X, [q])

        select()
        _fan_out(circ, word)
        if mode is Uncompute.MIRROR:
            select()
        else:
            circ.append(RESET, [ctrl])

    if mode is Uncompute.MIRROR:
        circ.extend(reversed(stage1))
    else:
        for _, anc, _ in p_groups:
            for q in anc:
                circ.append(RESET, [q])
    return circ


BUILDERS = ("naive", "sawtooth", "predecoded")


def build(spec: QromSpec, builder: str, config: PartitionConfig | str | None = None,
          uncompute: Uncompute | str | None = None) -> Circuit:
    if builder == "naive":
        return build_naive(spec, uncompute)
    if builder == "sawtooth":
        return build_sawtooth(spec, uncompute)
    if builder == "predecoded":
        if config is None:
            raise ConfigError("the predecoded builder needs a partition config")
        return build_predecoded(spec, config, uncompute)
    raise ConfigError(f"unknown builder {builder!r}")


@dataclass(frozen=True)
class QubitOverhead:
    naive_qubits: int
    extra_qubits: int
    overhead_ratio: float


def qubit_overhead(spec: QromSpec, config: PartitionConfig | str) -> QubitOverhead:
    """Pre-decode ancilla relative to the n+d+2 qubits of the naive circuit."""
    if isinstance(config, str):
        config = parse_config(config)
    if config.n != spec.n:
        raise ConfigError("config does not match spec")
    naive = spec.n + spec.d + 2
    extra = sum(1 << g.size for g in config.groups if g.predecoded)
    return QubitOverhead(naive, extra, extra / naive)
