"""Gate-level circuit IR.

Gates are stored column-wise (numpy arrays, qubit lists in CSR form) so that
lowered circuits with millions of basis gates stay cheap to build, slice and
measure. Qubit ordering is little-endian everywhere: qubit 0 is the least
significant bit of a basis-state index.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from . import kernels


class CircuitError(ValueError):
    """Raised for malformed registers, gates or circuits."""


class Kind(IntEnum):
    X = 0
    SX = 1
    ID = 2
    RZ = 3
    H = 4
    SWAP = 5
    CX = 6
    CCX = 7
    MCX = 8
    MCX_ROOT = 9
    RESET = 10
    MEASURE = 11


_NAMES = {
    Kind.X: "x", Kind.SX: "sx", Kind.ID: "id", Kind.RZ: "rz", Kind.H: "h",
    Kind.SWAP: "swap", Kind.CX: "cx", Kind.CCX: "ccx", Kind.MCX: "mcx",
    Kind.MCX_ROOT: "mcx_root", Kind.RESET: "reset", Kind.MEASURE: "measure",
}
_BY_NAME = {v: k for k, v in _NAMES.items()}
_FIXED_ARITY = {
    Kind.X: 1, Kind.SX: 1, Kind.ID: 1, Kind.RZ: 1, Kind.H: 1, Kind.SWAP: 2,
    Kind.CX: 2, Kind.CCX: 3, Kind.RESET: 1, Kind.MEASURE: 1,
}

#: Gate kinds that make up the hardware basis.
BASIS_CODES = frozenset({Kind.RZ, Kind.X, Kind.SX, Kind.CX, Kind.ID})


@dataclass(frozen=True)
class GateKind:
    """A gate type plus its parameters.

    ``MCX_ROOT`` with ``k`` controls and root exponent ``s`` is the
    controlled X**(1/2**s) (or its adjoint when ``dagger`` is set).
    """

    code: Kind
    theta: float = 0.0
    k: int = 0
    s: int = 0
    dagger: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "code", Kind(self.code))
        if not math.isfinite(self.theta):
            raise CircuitError("rotation angle must be finite")
        if self.code is Kind.MCX and self.k < 1:
            raise CircuitError("MCX needs at least one control")
        if self.code is Kind.MCX_ROOT:
            if self.k < 0:
                raise CircuitError("MCXRoot control count must be >= 0")
            if self.s < 1:
                raise CircuitError("MCXRoot root exponent must be >= 1 (s=0 is MCX)")

    @property
    def arity(self) -> int:
        if self.code in (Kind.MCX, Kind.MCX_ROOT):
            return self.k + 1
        return _FIXED_ARITY[self.code]

    @property
    def name(self) -> str:
        return _NAMES[self.code]

    @property
    def label(self) -> str:
        """Histogram key: RZ angles are pooled, control counts are not."""
        if self.code is Kind.MCX:
            return f"mcx({self.k})"
        if self.code is Kind.MCX_ROOT:
            tag = "mcx_root_dg" if self.dagger else "mcx_root"
            return f"{tag}({self.k},{self.s})"
        return self.name

    def params(self) -> dict | None:
        if self.code is Kind.RZ:
            return {"theta": self.theta}
        if self.code is Kind.MCX:
            return {"k": self.k}
        if self.code is Kind.MCX_ROOT:
            return {"k": self.k, "s": self.s, "dagger": self.dagger}
        return None

    def __repr__(self) -> str:
        if self.code is Kind.RZ:
            return f"RZ({self.theta!r})"
        return self.label.upper()


X = GateKind(Kind.X)
SX = GateKind(Kind.SX)
ID = GateKind(Kind.ID)
H = GateKind(Kind.H)
SWAP = GateKind(Kind.SWAP)
CX = GateKind(Kind.CX)
CCX = GateKind(Kind.CCX)
RESET = GateKind(Kind.RESET)
MEASURE = GateKind(Kind.MEASURE)


def RZ(theta: float) -> GateKind:
    return GateKind(Kind.RZ, theta=float(theta))


def MCX(k: int) -> GateKind:
    return GateKind(Kind.MCX, k=k)


def MCXRoot(k: int, s: int, dagger: bool = False) -> GateKind:
    return GateKind(Kind.MCX_ROOT, k=k, s=s, dagger=dagger)


class Gate(NamedTuple):
    kind: GateKind
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class Register:
    name: str
    offset: int
    len: int

    @property
    def qubits(self) -> list[int]:
        return list(range(self.offset, self.offset + self.len))

    def __getitem__(self, i: int) -> int:
        if not -self.len <= i < self.len:
            raise IndexError(f"register {self.name} has {self.len} qubits")
        return self.offset + (i % self.len)


class GateTable:
    """Columnar gate storage. Qubits of gate i are ``qubits[qptr[i]:qptr[i+1]]``."""

    __slots__ = ("code", "theta", "k", "s", "dagger", "qptr", "qubits")

    def __init__(self, code, theta, k, s, dagger, qptr, qubits):
        self.code = np.ascontiguousarray(code, dtype=np.uint8)
        self.theta = np.ascontiguousarray(theta, dtype=np.float64)
        self.k = np.ascontiguousarray(k, dtype=np.int16)
        self.s = np.ascontiguousarray(s, dtype=np.int16)
        self.dagger = np.ascontiguousarray(dagger, dtype=np.bool_)
        self.qptr = np.ascontiguousarray(qptr, dtype=np.int64)
        self.qubits = np.ascontiguousarray(qubits, dtype=np.int32)

    @classmethod
    def empty(cls) -> "GateTable":
        z = np.zeros(0)
        return cls(z, z, z, z, z, np.zeros(1), z)

    @classmethod
    def from_gates(cls, gates: Iterable[tuple[GateKind, Sequence[int]]]) -> "GateTable":
        code, theta, k, s, dag, qptr, qubits = [], [], [], [], [], [0], []
        for kind, qs in gates:
            code.append(kind.code)
            theta.append(kind.theta)
            k.append(kind.k)
            s.append(kind.s)
            dag.append(kind.dagger)
            qubits.extend(qs)
            qptr.append(len(qubits))
        return cls(code, theta, k, s, dag, qptr, qubits)

    @classmethod
    def concat(cls, tables: Sequence["GateTable"]) -> "GateTable":
        tables = [t for t in tables if len(t)]
        if not tables:
            return cls.empty()
        if len(tables) == 1:
            return tables[0]
        offsets = np.cumsum([0] + [len(t.qubits) for t in tables[:-1]])
        qptr = np.concatenate([tables[0].qptr[:1]] + [t.qptr[1:] + o for t, o in zip(tables, offsets)])
        return cls(
            np.concatenate([t.code for t in tables]),
            np.concatenate([t.theta for t in tables]),
            np.concatenate([t.k for t in tables]),
            np.concatenate([t.s for t in tables]),
            np.concatenate([t.dagger for t in tables]),
            qptr,
            np.concatenate([t.qubits for t in tables]),
        )

    def remap(self, qmap: np.ndarray) -> "GateTable":
        """Same gates with every qubit index ``q`` replaced by ``qmap[q]``."""
        return GateTable(self.code, self.theta, self.k, self.s, self.dagger, self.qptr, qmap[self.qubits])

    def slice(self, start: int, stop: int) -> "GateTable":
        a, b = self.qptr[start], self.qptr[stop]
        return GateTable(
            self.code[start:stop], self.theta[start:stop], self.k[start:stop],
            self.s[start:stop], self.dagger[start:stop], self.qptr[start:stop + 1] - a,
            self.qubits[a:b],
        )

    def kind(self, i: int) -> GateKind:
        return GateKind(Kind(int(self.code[i])), float(self.theta[i]), int(self.k[i]),
                        int(self.s[i]), bool(self.dagger[i]))

    def gate(self, i: int) -> Gate:
        return Gate(self.kind(i), tuple(int(q) for q in self.qubits[self.qptr[i]:self.qptr[i + 1]]))

    def __len__(self) -> int:
        return len(self.code)

    def __iter__(self) -> Iterator[Gate]:
        for i in range(len(self)):
            yield self.gate(i)


def _check_tiling(registers: Sequence[Register]) -> int:
    spans = sorted((r.offset, r.len, r.name) for r in registers)
    pos = 0
    for offset, length, name in spans:
        if length < 0:
            raise CircuitError(f"register {name!r} has negative length")
        if offset != pos:
            kind = "overlap" if offset < pos else "gap"
            raise CircuitError(f"registers do not tile the qubit range ({kind} at {name!r})")
        pos += length
    return pos


class Circuit:
    """Ordered gate list over named registers.

    ``append`` validates each gate; transpiler passes build new circuits
    through :meth:`_extend_table`, which trusts its input.
    """

    def __init__(self, registers: Sequence[Register]):
        self.registers: tuple[Register, ...] = tuple(registers)
        self.num_qubits = _check_tiling(self.registers)
        names = [r.name for r in self.registers]
        if len(set(names)) != len(names):
            raise CircuitError("duplicate register names")
        self._chunks: list[GateTable] = []
        self._pending: list[tuple[GateKind, tuple[int, ...]]] = []
        self._table: GateTable | None = GateTable.empty()
        self._measured: set[int] = set()

    @classmethod
    def from_sizes(cls, sizes: Iterable[tuple[str, int]]) -> "Circuit":
        regs, pos = [], 0
        for name, length in sizes:
            if length:
                regs.append(Register(name, pos, length))
                pos += length
        return cls(regs)

    def register(self, name: str) -> Register:
        for r in self.registers:
            if r.name == name:
                return r
        raise KeyError(name)

    def has_register(self, name: str) -> bool:
        return any(r.name == name for r in self.registers)

    def append(self, kind: GateKind, qubits: Sequence[int]) -> "Circuit":
        qs = tuple(int(q) for q in qubits)
        if len(qs) != kind.arity:
            raise CircuitError(f"{kind!r} acts on {kind.arity} qubits, got {len(qs)}")
        if len(set(qs)) != len(qs):
            raise CircuitError(f"duplicate qubit in {qs}")
        for q in qs:
            if not 0 <= q < self.num_qubits:
                raise CircuitError(f"qubit {q} out of range for {self.num_qubits}-qubit circuit")
        if kind.code is Kind.MEASURE:
            self._measured.add(qs[0])
        elif self._measured.intersection(qs):
            raise CircuitError("gate after MEASURE on the same qubit")
        self._pending.append((kind, qs))
        self._table = None
        return self

    def extend(self, gates: Iterable[tuple[GateKind, Sequence[int]]]) -> "Circuit":
        for kind, qs in gates:
            self.append(kind, qs)
        return self

    def _flush(self) -> None:
        if self._pending:
            self._chunks.append(GateTable.from_gates(self._pending))
            self._pending = []

    def _extend_table(self, table: GateTable) -> None:
        self._flush()
        self._chunks.append(table)
        self._table = None

    @property
    def table(self) -> GateTable:
        if self._table is None:
            self._flush()
            self._table = GateTable.concat(self._chunks)
            self._chunks = [self._table]
        return self._table

    @property
    def gates(self) -> list[Gate]:
        return list(self.table)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.table)

    def __len__(self) -> int:
        return len(self.table)

    def copy_empty(self) -> "Circuit":
        return Circuit(self.registers)

    def __repr__(self) -> str:
        regs = ", ".join(f"{r.name}:{r.len}" for r in self.registers)
        return f"<Circuit {self.num_qubits} qubits [{regs}], {len(self)} gates>"


def new_circuit(registers: Sequence[Register]) -> Circuit:
    return Circuit(registers)


def append(circuit: Circuit, kind: GateKind, qubits: Sequence[int]) -> Circuit:
    return circuit.append(kind, qubits)


def concat(a: Circuit, b: Circuit) -> Circuit:
    if a.registers != b.registers:
        raise CircuitError("circuits have different registers")
    out = a.copy_empty()
    out._extend_table(a.table)
    out._extend_table(b.table)
    return out


def depth(circuit: Circuit) -> int:
    """ASAP layer count; every gate, RESET and MEASURE included, costs one layer."""
    t = circuit.table
    return kernels.asap_depth(t.qptr, t.qubits, circuit.num_qubits)


@dataclass(frozen=True)
class GateCounts:
    counts: dict[str, int]
    total: int

    def __getitem__(self, label: str) -> int:
        return self.counts.get(label, 0)

    def basis_only(self) -> bool:
        basis = {_NAMES[c] for c in BASIS_CODES}
        return set(self.counts) <= basis


def gate_counts(circuit: Circuit) -> GateCounts:
    t = circuit.table
    counts: Counter[str] = Counter()
    plain = np.bincount(t.code, minlength=len(Kind))
    for code, n in enumerate(plain):
        if n and Kind(code) not in (Kind.MCX, Kind.MCX_ROOT):
            counts[_NAMES[Kind(code)]] = int(n)
    special = np.flatnonzero((t.code == Kind.MCX) | (t.code == Kind.MCX_ROOT))
    for i in special:
        counts[t.kind(int(i)).label] += 1
    return GateCounts(dict(sorted(counts.items())), len(t))


UNITARY_QUBIT_CAP = 12


def unitary_of(circuit: Circuit) -> np.ndarray:
    """Dense unitary, little-endian, for circuits of at most 12 qubits."""
    from .dense import apply_gate

    n = circuit.num_qubits
    if n > UNITARY_QUBIT_CAP:
        raise CircuitError(f"unitary_of refuses {n} qubits (cap {UNITARY_QUBIT_CAP})")
    t = circuit.table
    if np.any((t.code == Kind.RESET) | (t.code == Kind.MEASURE)):
        raise CircuitError("circuit contains RESET/MEASURE and has no unitary")
    dim = 1 << n
    # columns are basis inputs; trailing axis is the batch
    psi = np.eye(dim, dtype=np.complex128).reshape((2,) * n + (dim,))
    for g in t:
        psi = apply_gate(psi, n, g.kind, g.qubits)
    return psi.reshape(dim, dim)


# -- JSON ---------------------------------------------------------------------

def to_dict(circuit: Circuit) -> dict:
    gates = []
    for g in circuit:
        entry = {"kind": g.kind.name}
        params = g.kind.params()
        if params is not None:
            entry["params"] = params
        entry["qubits"] = list(g.qubits)
        gates.append(entry)
    return {
        "num_qubits": circuit.num_qubits,
        "registers": [{"name": r.name, "offset": r.offset, "len": r.len} for r in circuit.registers],
        "gates": gates,
    }


def from_dict(data: dict) -> Circuit:
    try:
        regs = [Register(r["name"], int(r["offset"]), int(r["len"])) for r in data["registers"]]
        circ = Circuit(regs)
        if circ.num_qubits != data["num_qubits"]:
            raise CircuitError("num_qubits disagrees with registers")
        for g in data["gates"]:
            code = _BY_NAME[g["kind"]]
            p = g.get("params") or {}
            kind = GateKind(code, float(p.get("theta", 0.0)), int(p.get("k", 0)),
                            int(p.get("s", 0)), bool(p.get("dagger", False)))
            circ.append(kind, g["qubits"])
    except (KeyError, TypeError) as exc:
        raise CircuitError(f"bad circuit JSON: {exc}") from exc
    return circ


def dumps(circuit: Circuit) -> str:
    return json.dumps(to_dict(circuit), separators=(",", ":"))


def loads(text: str) -> Circuit:
    return from_dict(json.loads(text))
