import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qromkit.circuit import (
    CCX, CX, H, ID, MCX, RZ, SWAP, SX, X, Circuit, Kind, MCXRoot, depth, gate_counts, unitary_of,
)
from qromkit.dense import root_matrix
from qromkit.qrom import QromSpec, build_naive
from qromkit.transpile import (
    RECURSIVE, VCHAIN, CouplingMap, McxStrategy, TranspileError, attach_decomp_ancilla, compile,
    decompose_mcx, euler_zsx, lower_gate, route, to_basis,
)

from test_circuit import layered_depth


def assert_equal_up_to_phase(a, b, atol=1e-8):
    i = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    phase = a[i] / b[i]
    assert abs(abs(phase) - 1) < atol
    np.testing.assert_allclose(a, phase * b, atol=atol)


def single_gate(kind, n=None):
    c = Circuit.from_sizes([("q", n or kind.arity)])
    c.append(kind, range(kind.arity))
    return c


def mcx_permutation(k):
    """C^kX on qubits 0..k-1 -> k, built directly from bit arithmetic."""
    dim = 1 << (k + 1)
    full = (1 << k) - 1
    u = np.zeros((dim, dim))
    for i in range(dim):
        u[i ^ (1 << k) if (i & full) == full else i, i] = 1
    return u


@pytest.mark.parametrize("kind", [
    H, SWAP, CCX, MCXRoot(0, 1), MCXRoot(0, 2, True), MCXRoot(1, 1), MCXRoot(1, 3, True),
    MCXRoot(2, 1), MCXRoot(3, 2, True),
])
def test_lowering_preserves_unitary(kind):
    c = single_gate(kind)
    low = to_basis(c)
    assert gate_counts(low).basis_only()
    assert_equal_up_to_phase(unitary_of(low), unitary_of(c))


@pytest.mark.parametrize("k", range(1, 7))
def test_recursive_mcx_brute_force(k):
    low = to_basis(single_gate(MCX(k)))
    assert gate_counts(low).basis_only()
    assert_equal_up_to_phase(unitary_of(low), mcx_permutation(k))


@pytest.mark.parametrize("s", [1, 2, 3])
def test_root_matrix_is_root_of_x(s):
    r = root_matrix(s)
    m = np.linalg.matrix_power(r, 1 << s)
    np.testing.assert_allclose(m, [[0, 1], [1, 0]], atol=1e-12)
    np.testing.assert_allclose(root_matrix(s, True) @ r, np.eye(2), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_euler_zsx_reconstructs(a, b, c):
    rz = lambda t: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    ry = lambda t: np.array([[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]])
    u = rz(a) @ ry(b) @ rz(c)
    circ = Circuit.from_sizes([("q", 1)])
    circ.extend(euler_zsx(u))
    assert_equal_up_to_phase(unitary_of(circ), u)


def test_vchain_mcx5_uses_seven_toffolis():
    gates = decompose_mcx(MCX(5), range(6), McxStrategy.vchain([6, 7, 8]))
    assert [g.code for g, _ in gates] == [Kind.CCX] * 7


@pytest.mark.parametrize("k", range(3, 8))
def test_vchain_toffoli_count(k):
    gates = decompose_mcx(MCX(k), range(k + 1), McxStrategy.vchain(range(k + 1, 2 * k - 1)))
    assert len(gates) == 2 * k - 3


@pytest.mark.parametrize("k", [3, 4, 5])
def test_vchain_restores_ancilla(k):
    c = attach_decomp_ancilla(single_gate(MCX(k)))[0]
    anc = c.register("decomp_anc")
    assert anc.len == k - 2
    lowered, _ = compile(single_gate(MCX(k)), VCHAIN)
    u = unitary_of(lowered)
    logical = 1 << (k + 1)
    # ancilla are the high qubits: restrict to their |0> block
    np.testing.assert_allclose(np.abs(u[logical:, :logical]), 0, atol=1e-9)
    assert_equal_up_to_phase(u[:logical, :logical], mcx_permutation(k))


def test_vchain_errors():
    with pytest.raises(TranspileError):
        decompose_mcx(MCX(4), range(5), McxStrategy.vchain([5]))
    with pytest.raises(TranspileError):
        decompose_mcx(MCX(4), range(5), McxStrategy.vchain([4, 5]))
    with pytest.raises(TranspileError):
        McxStrategy("ladder")


@pytest.mark.parametrize("k, gates, dep", [
    (2, 19, 14), (3, 79, 49), (4, 215, 134), (5, 519, 328), (6, 1191, 767),
])
def test_recursive_counts_frozen(k, gates, dep):
    low = to_basis(single_gate(MCX(k)))
    assert len(low) == gates
    assert depth(low) == dep


def test_lower_gate_leaves_basis_alone():
    assert lower_gate(RZ(0.3), [2]) == [(RZ(0.3), (2,))]
    assert lower_gate(ID, [0]) == [(ID, (0,))]


def test_naive_fig2_depth_regression():
    lowered, report = compile(build_naive(QromSpec(2, (5, 7, 2, 1))))
    ref = layered_depth([(g.kind, g.qubits) for g in lowered], lowered.num_qubits)
    assert report.depth == ref == 385
    assert report.total_gates == 655
    assert report.basis_gate_counts == {"cx": 183, "rz": 376, "sx": 80, "x": 16}
    assert report.swaps_inserted == 0


# -- routing ------------------------------------------------------------------

def test_coupling_validation():
    with pytest.raises(TranspileError):
        CouplingMap(3, ((0, 0),))
    with pytest.raises(TranspileError):
        CouplingMap(3, ((0, 1), (1, 0), (1, 2)))
    with pytest.raises(TranspileError):
        CouplingMap(3, ((0, 1),))
    with pytest.raises(TranspileError):
        CouplingMap(2, ((0, 2),))
    with pytest.raises(TranspileError):
        CouplingMap.from_edge_list("0 1 2\n")


def test_coupling_file_parsing(tmp_path):
    p = tmp_path / "ring.txt"
    p.write_text("# ring\n0 1\n1 2  # inline\n\n2 3\n3 0\n")
    cm = CouplingMap.from_file(p)
    assert cm.num_physical == 4
    assert cm.edges == ((0, 1), (0, 3), (1, 2), (2, 3))
    assert cm.shortest_path(0, 2) == [0, 1, 2]


def test_heavy_hex_27():
    cm = CouplingMap.heavy_hex_27()
    assert cm.num_physical == 27
    assert len(cm.edges) == 28
    degrees = [len(cm.neighbors(p)) for p in range(27)]
    assert max(degrees) == 3
    assert degrees.count(3) == 8


def layout_permutation(l2p, n):
    dim = 1 << n
    p = np.zeros((dim, dim))
    for i in range(dim):
        j = 0
        for lq, pq in enumerate(l2p):
            j |= ((i >> lq) & 1) << pq
        p[j, i] = 1
    return p


basis_op = st.tuples(st.sampled_from(["rz", "sx", "x", "cx"]), st.permutations(range(6)),
                     st.floats(-3, 3))


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 6), st.lists(basis_op, min_size=1, max_size=25))
def test_routing_on_line_is_equivalent(n, ops):
    c = Circuit.from_sizes([("q", n)])
    for name, perm, theta in ops:
        qs = [q for q in perm if q < n]
        kind = {"sx": SX, "x": X, "cx": CX}.get(name) or RZ(theta)
        c.append(kind, qs[:kind.arity])
    line = CouplingMap.line(n)
    routed, l2p = route(c, line)
    for g in routed:
        if len(g.qubits) == 2:
            assert line.adjacent(*g.qubits)
    assert_equal_up_to_phase(unitary_of(routed), layout_permutation(l2p, n) @ unitary_of(c))


def test_compiled_heavy_hex_respects_edges():
    cm = CouplingMap.heavy_hex_27()
    lowered, report = compile(build_naive(QromSpec(3, range(8))), RECURSIVE, cm)
    assert lowered.num_qubits == 27
    assert report.swaps_inserted > 0
    t = lowered.table
    two = np.flatnonzero(np.diff(t.qptr) == 2)
    pairs = {(int(t.qubits[t.qptr[i]]), int(t.qubits[t.qptr[i] + 1])) for i in two}
    edges = set(cm.edges)
    assert all((min(p), max(p)) in edges for p in pairs)
    assert set(t.code.tolist()) <= {Kind.RZ, Kind.SX, Kind.X, Kind.CX}


def test_route_rejects_unlowered_and_oversized():
    c = single_gate(CCX)
    with pytest.raises(TranspileError):
        route(c, CouplingMap.line(3))
    with pytest.raises(TranspileError):
        route(single_gate(CX, 4), CouplingMap.line(3))
    with pytest.raises(TranspileError):
        route(single_gate(CX, 3), CouplingMap.line(3), [0, 0, 1])


def test_compile_report_fields():
    _, rep = compile(single_gate(MCX(3)))
    d = rep.to_dict()
    assert list(d) == ["wall_time", "depth", "basis_gate_counts", "total_gates", "num_qubits",
                       "swaps_inserted"]
    assert rep.wall_time > 0
    assert rep.total_gates == 79
