import json

import numpy as np
import pytest

from qromkit.circuit import CX, H, MEASURE, MCX, RESET, RZ, SX, X, Circuit
from qromkit.qrom import QromSpec
from qromkit.simulate import (
    NOISELESS, NoiseModel, SimulationError, basis_probabilities, derive_seed, measured_qrom,
    noiseless_distribution, read_fidelity, run_shots, run_statevector, splitmix64_stream,
)
from qromkit.transpile import CouplingMap, compile, to_basis


def basis_circuit(n, gates, measure=()):
    c = Circuit.from_sizes([("q", n)])
    c.extend(gates)
    for q in measure:
        c.append(MEASURE, [q])
    return c


def test_splitmix64_reference_values():
    # first outputs of the reference splitmix64 generator seeded with 0
    assert splitmix64_stream(0, 2) == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4]


def test_derive_seed_is_deterministic_and_spread():
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    assert len({derive_seed(7, a) for a in range(100)}) == 100


def test_noise_model_range():
    with pytest.raises(SimulationError):
        NoiseModel(p2=1.5)


def test_statevector_bell_state():
    c = to_basis(basis_circuit(2, [(H, [0]), (CX, [0, 1])]))
    probs = basis_probabilities(run_statevector(c), [0, 1])
    assert probs == pytest.approx({0: 0.5, 3: 0.5})


def test_statevector_deterministic_reset_only():
    c = basis_circuit(2, [(X, [0]), (RESET, [0]), (X, [1])])
    psi = run_statevector(c)
    assert abs(psi[2]) == pytest.approx(1)
    c = to_basis(basis_circuit(1, [(H, [0]), (RESET, [0])]))
    with pytest.raises(SimulationError):
        run_statevector(c)


def test_statevector_cap():
    with pytest.raises(SimulationError):
        run_statevector(Circuit.from_sizes([("q", 25)]))


def test_shots_key_order():
    c = basis_circuit(3, [(X, [0]), (X, [2])], measure=[0, 1, 2])
    res = run_shots(c, NOISELESS, 10, 0)
    assert res.counts == {"101": 10}
    c = basis_circuit(3, [(X, [0])], measure=[2, 1, 0])
    assert run_shots(c, NOISELESS, 5, 0).counts == {"100": 5}


def test_shots_requires_basis_and_terminal_measure():
    with pytest.raises(SimulationError):
        run_shots(basis_circuit(2, [(H, [0])], measure=[0]), shots=1)
    with pytest.raises(SimulationError):
        run_shots(basis_circuit(2, [(X, [0])], measure=[0]), shots=0)


def test_measurement_statistics_bell():
    c = to_basis(basis_circuit(2, [(H, [0]), (CX, [0, 1])]))
    c.append(MEASURE, [0]).append(MEASURE, [1])
    res = run_shots(c, NOISELESS, 20000, 3)
    assert set(res.counts) == {"00", "11"}
    assert res.counts["00"] / 20000 == pytest.approx(0.5, abs=0.02)


def test_stochastic_reset_statistics():
    # Bell pair, then reset one half; the other half stays uniformly random
    c = to_basis(basis_circuit(2, [(H, [0]), (CX, [0, 1]), (RESET, [0])]))
    c.append(MEASURE, [0]).append(MEASURE, [1])
    res = run_shots(c, NOISELESS, 20000, 11)
    assert set(res.counts) == {"00", "10"}
    assert res.probability("10") == pytest.approx(0.5, abs=0.02)
    with pytest.raises(SimulationError):
        noiseless_distribution(c)


def test_sparse_matches_dense(rng):
    for trial in range(30):
        n = int(rng.integers(2, 7))
        gates = []
        for _ in range(40):
            r = rng.integers(4)
            if r == 0:
                gates.append((SX, [int(rng.integers(n))]))
            elif r == 1:
                gates.append((RZ(float(rng.uniform(-3, 3))), [int(rng.integers(n))]))
            elif r == 2:
                gates.append((X, [int(rng.integers(n))]))
            else:
                a, b = rng.choice(n, 2, replace=False)
                gates.append((CX, [int(a), int(b)]))
        init = int(rng.integers(1 << n))
        c = basis_circuit(n, gates)
        dense = basis_probabilities(run_statevector(c, init), range(n))
        sparse = noiseless_distribution(basis_circuit(n, gates, measure=range(n)), init)
        assert {int(k, 2): v for k, v in sparse.items() if v > 1e-15} == pytest.approx(dense, abs=1e-10)


def test_depolarizing_single_cx():
    # 12 of the 15 two-qubit Paulis flip at least one bit of |00>
    p2 = 0.3
    c = basis_circuit(2, [(CX, [0, 1])], measure=[0, 1])
    shots = 100_000
    res = run_shots(c, NoiseModel(0.0, p2), shots, 2024)
    flipped = 1 - res.probability("00")
    expected = p2 * 12 / 15
    sigma = (expected * (1 - expected) / shots) ** 0.5
    assert abs(flipped - expected) < 4 * sigma
    # each of the three wrong outcomes gets 4 of the 15 Paulis
    for bits in ("01", "10", "11"):
        assert res.probability(bits) == pytest.approx(p2 * 4 / 15, abs=5 * sigma)


def test_single_qubit_noise():
    c = basis_circuit(1, [(X, [0])], measure=[0])
    res = run_shots(c, NoiseModel(p1=0.3, p2=0.0), 50_000, 5)
    # X and Y flip |1> back, Z does not
    assert res.probability("0") == pytest.approx(0.2, abs=0.01)


def test_shots_reproducible_and_seed_sensitive():
    c = compile(measured_qrom(QromSpec(2, (5, 7, 2, 1)), "sawtooth"))[0]
    a = run_shots(c, NoiseModel(p2=0.05), 500, 9, initial_state=0b011)
    b = run_shots(c, NoiseModel(p2=0.05), 500, 9, initial_state=0b011)
    other = run_shots(c, NoiseModel(p2=0.05), 500, 10, initial_state=0b011)
    assert a == b
    assert a.counts != other.counts


def test_noiseless_qrom_readback_lowered():
    spec = QromSpec(2, (5, 7, 2, 1))
    for builder, config in [("naive", None), ("sawtooth", None), ("predecoded", "2P")]:
        c = compile(measured_qrom(spec, builder, config))[0]
        for a, word in enumerate(spec.data):
            init = 1 | (a << 1)
            dist = noiseless_distribution(c, init)
            assert list(dist) == [format(word, "04b")]
            assert dist[format(word, "04b")] == pytest.approx(1.0, abs=1e-12)


def test_read_fidelity_noiseless_is_one():
    rep = read_fidelity(QromSpec(2, (5, 7, 2, 1)), "sawtooth", noise=NOISELESS, shots=50)
    assert rep.mean_fidelity == 1.0
    assert set(rep.per_address) == {0, 1, 2, 3}
    obj = json.loads(rep.to_json())
    assert obj["per_address"]["3"] == 1.0


def test_read_fidelity_routed_heavy_hex():
    cm = CouplingMap.heavy_hex_27()
    spec = QromSpec(2, (5, 7, 2, 1))
    rep = read_fidelity(spec, "naive", noise=NOISELESS, shots=20, coupling=cm,
                        connectivity_label="heavy-hex")
    assert rep.mean_fidelity == 1.0
    assert rep.connectivity == "heavy-hex"


def test_read_fidelity_vchain():
    from qromkit.transpile import VCHAIN
    rep = read_fidelity(QromSpec(3, range(8)), "naive", strategy=VCHAIN, noise=NOISELESS, shots=10)
    assert rep.mean_fidelity == 1.0


def test_run_shots_with_unused_qubits():
    c = basis_circuit(30, [(X, [29]), (CX, [29, 3])], measure=[3, 29])
    assert run_shots(c, shots=3).counts == {"11": 3}


def test_measure_must_be_terminal_on_trusted_table():
    from qromkit.circuit import GateTable
    c = Circuit.from_sizes([("q", 2)])
    c._extend_table(GateTable.from_gates([(MEASURE, (0,)), (X, (0,))]))
    with pytest.raises(SimulationError):
        run_shots(c, shots=1)


def test_mcx_gate_rejected_by_shots():
    c = basis_circuit(4, [(MCX(3), [0, 1, 2, 3])], measure=[3])
    with pytest.raises(SimulationError):
        run_shots(c, shots=1)
