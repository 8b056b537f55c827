"""Lowering to the {RZ, SX, X, CX, ID} basis, SWAP routing, compile reports.

Each non-basis gate kind is lowered once into a template over local qubit
slots; instances are produced by remapping the template's qubit column.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .circuit import (
    BASIS_CODES, CCX, CX, SX, Circuit, GateKind, GateTable, Kind, MCX,
    MCXRoot, RZ, Register, depth, gate_counts, H,
)

PI = math.pi


class TranspileError(ValueError):
    """Raised when a circuit cannot be lowered or routed."""


@dataclass(frozen=True)
class McxStrategy:
    """``recursive``: no ancilla, controlled-root recursion.
    ``vchain``: Toffoli chain over ``ancilla`` clean qubits (k-2 per MCX(k)).
    """

    name: str
    ancilla: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.name not in ("recursive", "vchain"):
            raise TranspileError(f"unknown MCX strategy {self.name!r}")

    @classmethod
    def vchain(cls, ancilla: Register | Sequence[int] | None = None) -> "McxStrategy":
        if isinstance(ancilla, Register):
            ancilla = ancilla.qubits
        return cls("vchain", None if ancilla is None else tuple(int(q) for q in ancilla))

    @classmethod
    def parse(cls, text: str) -> "McxStrategy":
        return cls(text.lower())


RECURSIVE = McxStrategy("recursive")
VCHAIN = McxStrategy("vchain")

Gates = list[tuple[GateKind, tuple[int, ...]]]


# -- one-level decompositions -------------------------------------------------

def decompose_toffoli(qubits: Sequence[int]) -> Gates:
    """6-CX Toffoli network over {H, RZ, CX}; RZ(+-pi/4) stand in for T/T-dagger."""
    a, b, t = qubits
    T, TD = RZ(PI / 4), RZ(-PI / 4)
    return [
        (H, (t,)), (CX, (b, t)), (TD, (t,)), (CX, (a, t)), (T, (t,)), (CX, (b, t)),
        (TD, (t,)), (CX, (a, t)), (T, (b,)), (T, (t,)), (H, (t,)), (CX, (a, b)),
        (T, (a,)), (TD, (b,)), (CX, (a, b)),
    ]


def _multi_controlled_phase(qubits: Sequence[int], phi: float) -> Gates:
    """diag phase exp(i*phi) on |1...1>, up to global phase, with no ancilla.

    Uses prod(x_i) = 2**-(m-1) * sum over nonempty S of (-1)**(|S|+1) parity_S(x):
    for each j the parities of subsets whose highest member is j are visited
    in Gray-code order on qubit j, one CX per step.
    """
    m = len(qubits)
    scale = phi / (1 << (m - 1))
    out: Gates = []
    for j in range(m - 1, -1, -1):
        tgt, ctrls = qubits[j], qubits[:j]
        prev = 0
        for g in range(1 << j):
            gray = g ^ (g >> 1)
            diff = gray ^ prev
            if diff:
                out.append((CX, (ctrls[diff.bit_length() - 1], tgt)))
            sign = 1 if (bin(gray).count("1") + 1) % 2 else -1
            out.append((RZ(sign * scale), (tgt,)))
            prev = gray
        if prev:
            out.append((CX, (ctrls[prev.bit_length() - 1], tgt)))
    return out


def _root_angle(kind: GateKind) -> float:
    phi = PI / (1 << kind.s)
    return -phi if kind.dagger else phi


def decompose_mcx(kind: GateKind, qubits: Sequence[int], strategy: McxStrategy = RECURSIVE) -> Gates:
    """One lowering step for MCX(k) / MCXRoot(k, s).

    MCX(k >= 3), recursive:
        C^kX = CV(c_k->t) C^{k-1}X(->c_k) CV^dg(c_k->t) C^{k-1}X(->c_k) C^{k-1}V(->t),
        V = X**(1/2).
    MCX(k >= 3), vchain: 2(k-2)+1 Toffolis over k-2 clean ancilla.
    MCXRoot(k >= 2): H-conjugated multi-controlled phase (Gray-code network).
    MCX(k <= 2) and MCXRoot(k <= 1) come back unchanged.
    """
    qs = tuple(qubits)
    *controls, t = qs
    k = len(controls)
    if kind.code is Kind.MCX:
        if k == 1:
            return [(CX, qs)]
        if k == 2:
            return [(CCX, qs)]
        if strategy.name == "vchain":
            anc = strategy.ancilla or ()
            if len(anc) < k - 2:
                raise TranspileError(f"V-chain for MCX({k}) needs {k - 2} ancilla, have {len(anc)}")
            if set(anc[:k - 2]) & set(qs):
                raise TranspileError("V-chain ancilla overlap the gate's qubits")
            chain = [(CCX, (controls[0], controls[1], anc[0]))]
            for i in range(2, k - 1):
                chain.append((CCX, (controls[i], anc[i - 2], anc[i - 1])))
            return chain + [(CCX, (controls[-1], anc[k - 3], t))] + chain[::-1]
        *rest, last = controls
        return [
            (MCXRoot(1, 1), (last, t)),
            (MCX(k - 1), (*rest, last)),
            (MCXRoot(1, 1, True), (last, t)),
            (MCX(k - 1), (*rest, last)),
            (MCXRoot(k - 1, 1), (*rest, t)),
        ]
    if kind.code is Kind.MCX_ROOT:
        if k <= 1:
            return [(kind, qs)]
        return [(H, (t,))] + _multi_controlled_phase(qs, _root_angle(kind)) + [(H, (t,))]
    raise TranspileError(f"decompose_mcx got {kind!r}")


def euler_zsx(u: np.ndarray) -> Gates:
    """Any 2x2 unitary as RZ . SX . RZ . SX . RZ (in circuit order: RZ(lam) first)."""
    v = u / np.sqrt(np.linalg.det(u))
    theta = 2 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    plus = 2 * np.angle(v[1, 1])
    minus = 2 * np.angle(v[1, 0])
    phi, lam = (plus + minus) / 2, (plus - minus) / 2
    return [(RZ(lam), (0,)), (SX, (0,)), (RZ(theta + PI), (0,)), (SX, (0,)), (RZ(phi + PI), (0,))]


def _controlled_root(kind: GateKind, qs: tuple[int, ...]) -> Gates:
    # X**a = H P(pi*a) H; controlled-P(phi) via the two-CX pattern
    c, t = qs
    phi = _root_angle(kind)
    return [
        (H, (t,)), (RZ(phi / 2), (c,)), (CX, (c, t)), (RZ(-phi / 2), (t,)),
        (CX, (c, t)), (RZ(phi / 2), (t,)), (H, (t,)),
    ]


def _lower_step(kind: GateKind, qs: tuple[int, ...], strategy: McxStrategy) -> Gates | None:
    code = kind.code
    if code in BASIS_CODES or code in (Kind.RESET, Kind.MEASURE):
        return None
    if code is Kind.H:
        return [(RZ(PI / 2), qs), (SX, qs), (RZ(PI / 2), qs)]
    if code is Kind.SWAP:
        a, b = qs
        return [(CX, (a, b)), (CX, (b, a)), (CX, (a, b))]
    if code is Kind.CCX:
        return decompose_toffoli(qs)
    if code is Kind.MCX:
        return decompose_mcx(kind, qs, strategy)
    if code is Kind.MCX_ROOT:
        if kind.k == 0:
            from .dense import root_matrix
            return [(g, qs) for g, _ in euler_zsx(root_matrix(kind.s, kind.dagger))]
        if kind.k == 1:
            return _controlled_root(kind, qs)
        return decompose_mcx(kind, qs, strategy)
    raise TranspileError(f"cannot lower {kind!r}")


def lower_gate(kind: GateKind, qubits: Sequence[int], strategy: McxStrategy = RECURSIVE) -> Gates:
    """Full lowering of one gate to basis gates."""
    out: Gates = []
    stack = [(kind, tuple(qubits))]
    while stack:
        g, qs = stack.pop()
        step = _lower_step(g, qs, strategy)
        if step is None:
            out.append((g, qs))
        else:
            stack.extend(reversed(step))
    return out


@lru_cache(maxsize=None)
def _template(kind: GateKind, strategy_name: str, n_anc: int) -> GateTable:
    arity = kind.arity
    strategy = McxStrategy(strategy_name, tuple(range(arity, arity + n_anc)))
    return GateTable.from_gates(lower_gate(kind, range(arity), strategy))


def _anc_needed(kind: GateKind, strategy: McxStrategy) -> int:
    if strategy.name == "vchain" and kind.code is Kind.MCX and kind.k >= 3:
        return kind.k - 2
    return 0


def to_basis(circuit: Circuit, strategy: McxStrategy = RECURSIVE) -> Circuit:
    """Lower every gate to {RZ, SX, X, CX, ID}; RESET/MEASURE pass through."""
    t = circuit.table
    passthrough = np.isin(t.code, [*BASIS_CODES, Kind.RESET, Kind.MEASURE])
    anc = np.asarray(strategy.ancilla or (), dtype=np.int32)
    chunks: list[GateTable] = []
    start = 0
    for i in np.flatnonzero(~passthrough).tolist():
        if i > start:
            chunks.append(t.slice(start, i))
        kind = t.kind(i)
        need = _anc_needed(kind, strategy)
        if need > len(anc):
            raise TranspileError(f"V-chain for {kind!r} needs {need} ancilla, have {len(anc)}")
        qmap = np.concatenate([t.qubits[t.qptr[i]:t.qptr[i + 1]], anc[:need]])
        if need and len(set(qmap.tolist())) != len(qmap):
            raise TranspileError("V-chain ancilla overlap the gate's qubits")
        chunks.append(_template(kind, strategy.name, need).remap(qmap))
        start = i + 1
    if start < len(t):
        chunks.append(t.slice(start, len(t)))
    out = circuit.copy_empty()
    out._extend_table(GateTable.concat(chunks))
    return out


def attach_decomp_ancilla(circuit: Circuit) -> tuple[Circuit, McxStrategy]:
    """Append a ``decomp_anc`` register big enough for a V-chain of every MCX."""
    t = circuit.table
    ks = t.k[t.code == Kind.MCX]
    need = max(int(ks.max()) - 2, 0) if len(ks) else 0
    if circuit.has_register("decomp_anc"):
        reg = circuit.register("decomp_anc")
        return circuit, McxStrategy.vchain(reg)
    out = Circuit([*circuit.registers, Register("decomp_anc", circuit.num_qubits, need)])
    out._extend_table(t)
    return out, McxStrategy.vchain(range(circuit.num_qubits, circuit.num_qubits + need))


# -- routing ------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingMap:
    num_physical: int
    edges: tuple[tuple[int, int], ...]
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        norm = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise TranspileError(f"self-loop on {u}")
            if not (0 <= u < self.num_physical and 0 <= v < self.num_physical):
                raise TranspileError(f"edge ({u}, {v}) out of range")
            norm.append((min(u, v), max(u, v)))
        if len(set(norm)) != len(norm):
            raise TranspileError("duplicate edge in coupling map")
        norm.sort()
        adj: list[list[int]] = [[] for _ in range(self.num_physical)]
        for u, v in norm:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "edges", tuple(norm))
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))
        seen = self._bfs(0)[0] if self.num_physical else {}
        if len(seen) != self.num_physical:
            raise TranspileError("coupling map is not connected")

    def neighbors(self, p: int) -> tuple[int, ...]:
        return self._adj[p]

    def adjacent(self, a: int, b: int) -> bool:
        return b in self._adj[a]

    def _bfs(self, src: int):
        parent = {src: -1}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in self._adj[u]:
                if w not in parent:
                    parent[w] = u
                    queue.append(w)
        return parent, None

    def shortest_path(self, src: int, dst: int) -> list[int]:
        """BFS path; neighbours are explored in ascending index order."""
        parent, _ = self._bfs(src)
        path = [dst]
        while path[-1] != src:
            path.append(parent[path[-1]])
        return path[::-1]

    @classmethod
    def from_edge_list(cls, text: str, num_physical: int | None = None) -> "CouplingMap":
        edges = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise TranspileError(f"line {lineno}: expected 'u v', got {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
        if num_physical is None:
            num_physical = 1 + max((max(e) for e in edges), default=-1)
        return cls(num_physical, tuple(edges))

    @classmethod
    def from_file(cls, path: str | Path) -> "CouplingMap":
        return cls.from_edge_list(Path(path).read_text())

    @classmethod
    def heavy_hex_27(cls) -> "CouplingMap":
        """27-qubit Falcon heavy-hex topology."""
        text = resources.files("qromkit").joinpath("data/falcon27.txt").read_text()
        return cls.from_edge_list(text)

    @classmethod
    def line(cls, n: int) -> "CouplingMap":
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))


def route(circuit: Circuit, coupling: CouplingMap,
          layout: Sequence[int] | None = None) -> tuple[Circuit, list[int]]:
    """Greedy SWAP insertion; returns the physical circuit and the final layout.

    ``layout[i]`` is the physical qubit of logical qubit ``i`` (identity by
    default). For each non-adjacent CX the first operand walks along a BFS
    shortest path until it neighbours the second.
    """
    n = circuit.num_qubits
    if n > coupling.num_physical:
        raise TranspileError(f"{n} logical qubits do not fit on {coupling.num_physical} physical")
    l2p = list(range(n)) if layout is None else [int(p) for p in layout]
    if len(l2p) != n or len(set(l2p)) != n:
        raise TranspileError("layout must map every logical qubit to a distinct physical qubit")
    p2l = [-1] * coupling.num_physical
    for lq, pq in enumerate(l2p):
        p2l[pq] = lq

    t = circuit.table
    codes = t.code.tolist()
    ptr = t.qptr.tolist()
    qs = t.qubits.tolist()
    thetas = t.theta.tolist()
    out_code, out_theta, out_q, out_ptr = [], [], [], [0]
    for i, c in enumerate(codes):
        gq = qs[ptr[i]:ptr[i + 1]]
        if len(gq) > 2:
            raise TranspileError("route expects a lowered circuit (at most 2-qubit gates)")
        if len(gq) == 2:
            pa, pb = l2p[gq[0]], l2p[gq[1]]
            if not coupling.adjacent(pa, pb):
                path = coupling.shortest_path(pa, pb)
                for u, v in zip(path[:-2], path[1:-1]):
                    out_code.append(Kind.SWAP)
                    out_theta.append(0.0)
                    out_q += [u, v]
                    out_ptr.append(len(out_q))
                    lu, lv = p2l[u], p2l[v]
                    p2l[u], p2l[v] = lv, lu
                    if lu >= 0:
                        l2p[lu] = v
                    if lv >= 0:
                        l2p[lv] = u
        out_code.append(c)
        out_theta.append(thetas[i])
        out_q += [l2p[q] for q in gq]
        out_ptr.append(len(out_q))
    z = np.zeros(len(out_code))
    table = GateTable(out_code, out_theta, z, z, z, out_ptr, out_q)
    routed = Circuit([Register("physical", 0, coupling.num_physical)])
    routed._extend_table(table)
    return routed, l2p


def expand_swaps(circuit: Circuit) -> Circuit:
    t = circuit.table
    if not np.any(t.code == Kind.SWAP):
        return circuit
    return to_basis(circuit, RECURSIVE)


# -- compile ------------------------------------------------------------------

@dataclass(frozen=True)
class CompilationReport:
    wall_time: float
    depth: int
    basis_gate_counts: dict[str, int]
    total_gates: int
    num_qubits: int
    swaps_inserted: int

    def to_dict(self) -> dict:
        return {
            "wall_time": self.wall_time, "depth": self.depth,
            "basis_gate_counts": dict(self.basis_gate_counts), "total_gates": self.total_gates,
            "num_qubits": self.num_qubits, "swaps_inserted": self.swaps_inserted,
        }


def compile(circuit: Circuit, strategy: McxStrategy = RECURSIVE,
            coupling: CouplingMap | None = None,
            layout: Sequence[int] | None = None) -> tuple[Circuit, CompilationReport]:
    """to_basis, then (optionally) route and expand the inserted SWAPs.

    A ``vchain`` strategy without explicit ancilla gets a ``decomp_anc``
    register appended first.
    """
    t0 = time.perf_counter_ns()
    if strategy.name == "vchain" and strategy.ancilla is None:
        circuit, strategy = attach_decomp_ancilla(circuit)
    lowered = to_basis(circuit, strategy)
    swaps = 0
    if coupling is not None:
        routed, _ = route(lowered, coupling, layout)
        swaps = int(np.count_nonzero(routed.table.code == Kind.SWAP))
        lowered = expand_swaps(routed)
    elapsed = max(time.perf_counter_ns() - t0, 1) * 1e-9
    counts = gate_counts(lowered)
    report = CompilationReport(
        wall_time=elapsed, depth=depth(lowered), basis_gate_counts=counts.counts,
        total_gates=counts.total, num_qubits=lowered.num_qubits, swaps_inserted=swaps,
    )
    return lowered, report
