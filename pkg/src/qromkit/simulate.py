"""Noiseless statevector runs, Pauli-trajectory shot sampling, QROM read fidelity.

Depolarizing noise is injected per shot: after each two-qubit basis gate,
with probability ``p2``, one of the 15 non-identity two-qubit Paulis (uniform);
after each single-qubit basis gate, with probability ``p1``, one of X/Y/Z.
All randomness for a shot comes from its own generator, seeded by a
splitmix64 expansion of the master seed, and is drawn before the kernel runs.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .circuit import MEASURE, X, Circuit, GateTable, Kind
from .dense import apply_gate, prob_one
from .qrom import PartitionConfig, QromSpec, build, format_config, parse_config
from .transpile import RECURSIVE, CouplingMap, McxStrategy, compile

STATEVECTOR_QUBIT_CAP = 24
# the sparse engine keys basis states by 64-bit integers
SPARSE_QUBIT_CAP = 62
_TRAJECTORY_CODES = (Kind.X, Kind.SX, Kind.ID, Kind.RZ, Kind.CX, Kind.RESET, Kind.MEASURE)
_ONE_QUBIT_NOISY = (Kind.X, Kind.SX, Kind.ID, Kind.RZ)

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SimulationError(ValueError):
    """Circuit not simulable as requested."""


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def splitmix64_stream(seed: int, count: int) -> list[int]:
    state = seed & _MASK
    out = []
    for _ in range(count):
        state = (state + _GOLDEN) & _MASK
        out.append(_mix64(state))
    return out


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic child seed, e.g. ``derive_seed(master, address)``."""
    s = seed & _MASK
    for p in path:
        s = _mix64((s ^ _mix64((p + _GOLDEN) & _MASK)) & _MASK)
    return s


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.001

    def __post_init__(self) -> None:
        for p in (self.p1, self.p2):
            if not 0.0 <= p <= 1.0:
                raise SimulationError(f"error probability {p} outside [0, 1]")


NOISELESS = NoiseModel(0.0, 0.0)


@dataclass(frozen=True)
class ShotResult:
    counts: dict[str, int]
    shots: int
    seed: int

    def probability(self, bits: str) -> float:
        return self.counts.get(bits, 0) / self.shots


# -- noiseless dense path -----------------------------------------------------

def run_statevector(circuit: Circuit, initial_state: int = 0) -> np.ndarray:
    """Dense noiseless evolution from basis state ``initial_state``.

    RESET is allowed only when the reset qubit is already in a definite state.
    """
    n = circuit.num_qubits
    if n > STATEVECTOR_QUBIT_CAP:
        raise SimulationError(f"{n} qubits exceeds the statevector cap of {STATEVECTOR_QUBIT_CAP}")
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[initial_state] = 1.0
    psi = psi.reshape((2,) * n) if n else psi
    for g in circuit:
        code = g.kind.code
        if code is Kind.MEASURE:
            raise SimulationError("MEASURE in run_statevector; use run_shots")
        if code is Kind.RESET:
            q = g.qubits[0]
            p1 = prob_one(psi, n, q)
            if 1e-12 < p1 < 1 - 1e-12:
                raise SimulationError(f"reset of qubit {q} is not deterministic (p1={p1:.3g}); use run_shots")
            if p1 >= 0.5:
                psi = apply_gate(psi, n, X, (q,))
            idx = [slice(None)] * n
            idx[n - 1 - q] = 1
            psi[tuple(idx)] = 0
            psi /= np.linalg.norm(psi)
            continue
        psi = apply_gate(psi, n, g.kind, g.qubits)
    return psi.reshape(-1)


def basis_probabilities(psi: np.ndarray, qubits) -> dict[int, float]:
    """Marginal distribution of ``qubits`` (bit j of the key = qubits[j])."""
    probs = np.abs(psi) ** 2
    idx = np.arange(len(psi))
    key = np.zeros(len(psi), dtype=np.int64)
    for j, q in enumerate(qubits):
        key |= ((idx >> q) & 1) << j
    out = np.bincount(key, weights=probs, minlength=1 << len(qubits))
    return {int(k): float(p) for k, p in enumerate(out) if p > 1e-15}


# -- trajectories -------------------------------------------------------------

@dataclass
class _Program:
    code: np.ndarray
    q0: np.ndarray
    q1: np.ndarray
    theta: np.ndarray
    meas: np.ndarray
    loc1: np.ndarray
    loc2: np.ndarray
    n_resets: int
    width: int
    qubit_map: dict[int, int] = field(default_factory=dict)


def _prepare(circuit: Circuit) -> _Program:
    t = circuit.table
    bad = ~np.isin(t.code, _TRAJECTORY_CODES)
    if bad.any():
        kind = t.kind(int(np.flatnonzero(bad)[0]))
        raise SimulationError(f"run_shots needs a basis circuit; found {kind!r}")
    arity = np.diff(t.qptr)
    first = t.qubits[t.qptr[:-1]]
    second = np.where(arity == 2, t.qubits[np.minimum(t.qptr[:-1] + 1, len(t.qubits) - 1)], -1)
    is_meas = t.code == Kind.MEASURE
    meas_q = first[is_meas]
    meas_idx = np.flatnonzero(is_meas)
    if len(meas_idx):
        last: dict[int, int] = {}
        for i in (np.flatnonzero(~is_meas[meas_idx[0]:]) + meas_idx[0]).tolist():
            for q in t.qubits[t.qptr[i]:t.qptr[i + 1]].tolist():
                last[q] = i
        for i, q in zip(meas_idx.tolist(), meas_q.tolist()):
            if last.get(q, -1) > i:
                raise SimulationError("MEASURE must be terminal on its qubit")
    keep = ~is_meas
    code, a, b = t.code[keep], first[keep], second[keep]
    used = np.unique(np.concatenate([a, b[b >= 0], meas_q]))
    if len(used) > SPARSE_QUBIT_CAP:
        raise SimulationError(f"{len(used)} active qubits exceeds the cap of {SPARSE_QUBIT_CAP}")
    lut = np.full(max(circuit.num_qubits, 1), -1, dtype=np.int32)
    lut[used] = np.arange(len(used), dtype=np.int32)
    q1 = np.where(b >= 0, lut[np.maximum(b, 0)], -1).astype(np.int32)
    return _Program(
        code=np.ascontiguousarray(code, dtype=np.uint8),
        q0=np.ascontiguousarray(lut[a]),
        q1=np.ascontiguousarray(q1),
        theta=np.ascontiguousarray(t.theta[keep]),
        meas=np.ascontiguousarray(lut[meas_q]),
        loc1=np.flatnonzero(np.isin(code, _ONE_QUBIT_NOISY)),
        loc2=np.flatnonzero(code == Kind.CX),
        n_resets=int(np.count_nonzero(code == Kind.RESET)),
        width=len(used),
        qubit_map={int(q): i for i, q in enumerate(used.tolist())},
    )


def _sample_errors(rng: np.random.Generator, prog: _Program, noise: NoiseModel):
    pos, codes = [], []
    if noise.p2 > 0 and len(prog.loc2):
        k = rng.binomial(len(prog.loc2), noise.p2)
        if k:
            pos.append(prog.loc2[rng.choice(len(prog.loc2), k, replace=False)])
            codes.append(rng.integers(1, 16, k))
    if noise.p1 > 0 and len(prog.loc1):
        k = rng.binomial(len(prog.loc1), noise.p1)
        if k:
            pos.append(prog.loc1[rng.choice(len(prog.loc1), k, replace=False)])
            codes.append(rng.integers(1, 4, k))
    if not pos:
        return None
    p = np.concatenate(pos)
    c = np.concatenate(codes)
    order = np.argsort(p, kind="stable")
    return p[order], c[order]


def _pick(keys: np.ndarray, probs: np.ndarray, u: float) -> int:
    cum = np.cumsum(probs)
    i = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return int(keys[min(i, len(keys) - 1)])


def _compact_index(prog: _Program, initial_state: int) -> int:
    init = 0
    for q, i in prog.qubit_map.items():
        if (initial_state >> q) & 1:
            init |= 1 << i
    return init


def noiseless_distribution(circuit: Circuit, initial_state: int = 0) -> dict[str, float]:
    """Exact outcome distribution of a basis circuit without noise.

    Keys use the same bit order as :func:`run_shots`. Raises if a RESET acts
    on a qubit in superposition, since the result would then be sampled.
    """
    prog = _prepare(circuit)
    keys, probs, stochastic = kernels.trajectory_distribution(
        prog.code, prog.q0, prog.q1, prog.theta, _compact_index(prog, initial_state),
        np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int8), np.zeros(prog.n_resets + 1),
        prog.meas)
    if stochastic:
        raise SimulationError("circuit resets a qubit in superposition")
    width = len(prog.meas)
    return {format(int(k), f"0{width}b") if width else "": float(p)
            for k, p in sorted(zip(keys, probs))}


def run_shots(circuit: Circuit, noise: NoiseModel = NOISELESS, shots: int = 1000, seed: int = 0,
              initial_state: int = 0) -> ShotResult:
    """Sample measurement outcomes of a basis circuit under depolarizing noise.

    Count keys are the measured bits in MEASURE order, printed MSB-first
    (the last measured qubit is the leftmost character).
    """
    if shots < 1:
        raise SimulationError("shots must be positive")
    prog = _prepare(circuit)
    init = _compact_index(prog, initial_state)
    nu = prog.n_resets + 1
    no_err = np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int8)
    base_keys, base_probs, stochastic = kernels.trajectory_distribution(
        prog.code, prog.q0, prog.q1, prog.theta, init, *no_err, np.zeros(nu), prog.meas)

    outcomes = np.zeros(shots, dtype=np.int64)
    uniforms = np.zeros((shots, nu))
    err_shots, err_pos, err_code = [], [], []
    for s, sub in enumerate(splitmix64_stream(seed, shots)):
        rng = np.random.default_rng(sub)
        errs = _sample_errors(rng, prog, noise)
        uniforms[s] = rng.random(nu)
        if errs is None and not stochastic:
            outcomes[s] = _pick(base_keys, base_probs, uniforms[s, -1])
        else:
            err_shots.append(s)
            if errs is not None:
                err_pos.append(errs[0])
                err_code.append(errs[1])
            else:
                err_pos.append(no_err[0])
                err_code.append(no_err[1])
    if err_shots:
        ptr = np.zeros(len(err_shots) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(p) for p in err_pos])
        sel = np.asarray(err_shots)
        outcomes[sel] = kernels.run_batch(
            prog.code, prog.q0, prog.q1, prog.theta, init, ptr,
            np.ascontiguousarray(np.concatenate(err_pos), dtype=np.int64),
            np.ascontiguousarray(np.concatenate(err_code), dtype=np.int8),
            np.ascontiguousarray(uniforms[sel]), prog.meas)
    width = len(prog.meas)
    tally = Counter(outcomes.tolist())
    counts = {format(k, f"0{width}b") if width else "": v for k, v in sorted(tally.items())}
    return ShotResult(dict(sorted(counts.items())), shots, seed)


# -- QROM read fidelity -------------------------------------------------------

@dataclass(frozen=True)
class FidelityReport:
    per_address: dict[int, float]
    mean_fidelity: float
    builder: str
    n: int
    connectivity: str
    seed: int
    config: str = "-"
    shots: int = 0

    def to_dict(self) -> dict:
        return {
            "builder": self.builder, "n": self.n, "config": self.config,
            "connectivity": self.connectivity, "seed": self.seed, "shots": self.shots,
            "mean_fidelity": self.mean_fidelity,
            "per_address": {str(a): f for a, f in self.per_address.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def measured_qrom(spec: QromSpec, builder: str, config: PartitionConfig | str | None = None,
                  uncompute=None) -> Circuit:
    circ = build(spec, builder, config, uncompute)
    for q in circ.register("data").qubits:
        circ.append(MEASURE, [q])
    return circ


def address_preparation(circuit: Circuit, address: int, layout=None) -> GateTable:
    """X gates setting read=1 and the address lines to ``address``."""
    qs = [circuit.register("read")[0]]
    addr = circuit.register("address")
    qs += [addr[i] for i in range(addr.len) if (address >> i) & 1]
    if layout is not None:
        qs = [layout[q] for q in qs]
    return GateTable.from_gates((X, (q,)) for q in qs)


def read_fidelity(spec: QromSpec, builder: str, config: PartitionConfig | str | None = None,
                  strategy: McxStrategy = RECURSIVE, coupling: CouplingMap | None = None,
                  noise: NoiseModel = NoiseModel(), shots: int = 1000, seed: int = 0,
                  uncompute=None, connectivity_label: str | None = None) -> FidelityReport:
    """Success probability of reading ``data[a]`` at every address ``a``.

    The QROM (plus data-register MEASUREs) is compiled once; each address
    prepends its X preparation, which is already in basis form and so leaves
    routing untouched.
    """
    if isinstance(config, str):
        config = parse_config(config)
    logical = measured_qrom(spec, builder, config, uncompute)
    compiled, _ = compile(logical, strategy, coupling)
    per_address = {}
    for a, word in enumerate(spec.data):
        prep = address_preparation(logical, a)
        circ = compiled.copy_empty()
        circ._extend_table(GateTable.concat([prep, compiled.table]))
        result = run_shots(circ, noise, shots, derive_seed(seed, a))
        per_address[a] = result.probability(format(word, f"0{spec.d}b"))
    mean = float(np.mean(list(per_address.values())))
    if connectivity_label is None:
        connectivity_label = "full" if coupling is None else f"coupled{coupling.num_physical}"
    return FidelityReport(per_address, mean, builder, spec.n, connectivity_label, seed,
                          format_config(config) if config is not None else "-", shots)
