import numpy as np
import pytest

from qromkit.circuit import Kind, gate_counts
from qromkit.qrom import (
    ConfigError, Group, PartitionConfig, QromSpec, Uncompute, build, build_naive, build_predecoded,
    build_sawtooth, enumerate_configs, format_config, optimal_config, parse_config, qubit_overhead,
)

FIG2 = QromSpec(2, (5, 7, 2, 1))


def classical_run(circuit, bits):
    """Bit-level oracle; every builder gate is a classical reversible gate or a reset."""
    bits = list(bits)
    for g in circuit:
        c, qs = g.kind.code, g.qubits
        if c is Kind.X:
            bits[qs[0]] ^= 1
        elif c in (Kind.CX, Kind.CCX, Kind.MCX):
            if all(bits[q] for q in qs[:-1]):
                bits[qs[-1]] ^= 1
        elif c is Kind.RESET:
            bits[qs[0]] = 0
        else:
            raise AssertionError(f"unexpected {g.kind!r}")
    return bits


def initial_bits(circuit, address):
    bits = [0] * circuit.num_qubits
    bits[circuit.register("read")[0]] = 1
    for i, q in enumerate(circuit.register("address").qubits):
        bits[q] = (address >> i) & 1
    return bits


def assert_reads_back(circuit, spec):
    data = circuit.register("data").qubits
    for a, word in enumerate(spec.data):
        start = initial_bits(circuit, a)
        end = classical_run(circuit, start)
        got = sum(end[q] << j for j, q in enumerate(data))
        assert got == word, f"address {a}"
        for q in range(circuit.num_qubits):
            if q not in data:
                assert end[q] == start[q], f"qubit {q} not restored at address {a}"


def test_parse_and_format():
    c = parse_config("2P+2P+1U")
    assert c.groups == (Group(2, True), Group(2, True), Group(1, False))
    assert format_config(c) == "2P+2P+1U"
    assert format_config(parse_config(" 3(p) + 2u ")) == "3P+2U"
    assert c.n == 5


@pytest.mark.parametrize("bad", ["", "2X", "P", "0P+2P", "2P++1U", "2.5P"])
def test_parse_rejects(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_normalized_splits_undecoded():
    assert format_config(parse_config("2U+3P+1P").normalized()) == "3P+1P+1U+1U"


@pytest.mark.parametrize("n, expected", [(1, "1P"), (2, "1P+1P"), (5, "3P+2P"), (8, "4P+4P")])
def test_optimal_config(n, expected):
    assert format_config(optimal_config(n)) == expected


def partition_count(m):
    p = [1] + [0] * m
    for part in range(1, m + 1):
        for total in range(part, m + 1):
            p[total] += p[total - part]
    return p


@pytest.mark.parametrize("n", range(1, 9))
def test_enumerate_configs_counts(n):
    configs = enumerate_configs(n)
    assert len(configs) == sum(partition_count(n)[: n + 1])
    assert len({format_config(c) for c in configs}) == len(configs)
    assert all(c.n == n for c in configs)
    assert format_config(configs[0]) == f"{n}P"
    assert format_config(configs[-1]) == "+".join(["1U"] * n)


def test_enumerate_range():
    with pytest.raises(ConfigError):
        enumerate_configs(0)
    with pytest.raises(ConfigError):
        enumerate_configs(13)


def test_spec_validation():
    with pytest.raises(ConfigError):
        QromSpec(2, (1, 2, 3))
    with pytest.raises(ConfigError):
        QromSpec(2, (1, 2, 3, 16))
    with pytest.raises(ConfigError):
        QromSpec(0, (1,))
    assert QromSpec.from_dict({"n": 1, "data": [3, 4]}).d == 4


def test_naive_fig2_layout():
    c = build_naive(FIG2)
    assert c.num_qubits == 8
    assert [r.name for r in c.registers] == ["read", "address", "cnot_ctrl", "data"]
    counts = gate_counts(c)
    assert counts["mcx(3)"] == 8
    # popcounts 2 + 3 + 1 + 1
    assert counts["cx"] == 7
    assert_reads_back(c, FIG2)


@pytest.mark.parametrize("n", range(1, 9))
def test_naive_mcx_census(n):
    spec = QromSpec(n, [0] * (1 << n))
    counts = gate_counts(build_naive(spec, Uncompute.MIRROR))
    assert counts[f"mcx({n + 1})"] == 1 << (n + 1)


def random_spec(n, seed, d=4):
    rng = np.random.default_rng(seed)
    return QromSpec(n, rng.integers(0, 1 << d, 1 << n), d)


@pytest.mark.parametrize("mode", ["mirror", "reset"])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_naive_and_sawtooth_read_back(n, mode):
    for seed in range(3):
        spec = random_spec(n, seed)
        assert_reads_back(build_naive(spec, mode), spec)
        assert_reads_back(build_sawtooth(spec, mode), spec)


@pytest.mark.parametrize("mode", ["mirror", "reset"])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_predecoded_read_back_all_configs(n, mode):
    spec = random_spec(n, 7 + n)
    for config in enumerate_configs(n):
        assert_reads_back(build_predecoded(spec, config, mode), spec)


def test_predecoded_registers():
    c = build_predecoded(random_spec(5, 0), "2P+1U+2P")
    assert c.register("predecode_anc[0]").len == 4
    assert c.register("predecode_anc[1]").len == 4
    assert c.num_qubits == 5 + 8 + 1 + 1 + 4


def test_sawtooth_ladder_shape():
    c = build_sawtooth(random_spec(4, 1), "mirror")
    counts = gate_counts(c)
    assert c.register("ladder_anc").len == 3
    assert counts["ccx"] == 16 * 2 * 4


def test_sawtooth_single_line_falls_back():
    spec = random_spec(1, 0)
    assert build_sawtooth(spec).gates == build_naive(spec).gates


def test_build_errors():
    with pytest.raises(ConfigError):
        build(FIG2, "predecoded")
    with pytest.raises(ConfigError):
        build(FIG2, "predecoded", "2P+1P")
    with pytest.raises(ConfigError):
        build(FIG2, "quantum-magic")


@pytest.mark.parametrize("n, config, extra, ratio", [
    (2, "2P", 4, 0.5),
    (3, "2P+1U", 4, 4 / 9),
    (5, "2P+1U+1U+1U", 4, 4 / 11),
    (8, "4P+4P", 32, 32 / 14),
])
def test_qubit_overhead(n, config, extra, ratio):
    o = qubit_overhead(QromSpec(n, [0] * (1 << n)), config)
    assert o.extra_qubits == extra
    assert o.naive_qubits == n + 6
    assert o.overhead_ratio == pytest.approx(ratio)


def test_overhead_mismatch():
    with pytest.raises(ConfigError):
        qubit_overhead(FIG2, PartitionConfig((Group(3, True),)))
