"""QROM circuit construction, lowering, routing and noisy simulation."""
from .circuit import (
    Circuit, CircuitError, GateKind, Register, concat, depth, dumps, gate_counts, loads,
    new_circuit, unitary_of,
)
from .kernels import BACKEND
from .qrom import (
    ConfigError, PartitionConfig, QromSpec, Uncompute, build, build_naive, build_predecoded,
    build_sawtooth, enumerate_configs, format_config, optimal_config, parse_config, qubit_overhead,
)
from .simulate import NoiseModel, read_fidelity, run_shots, run_statevector
from .transpile import (
    RECURSIVE, VCHAIN, CompilationReport, CouplingMap, McxStrategy, compile, route, to_basis,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Circuit",
    "CircuitError",
    "CompilationReport",
    "ConfigError",
    "CouplingMap",
    "GateKind",
    "McxStrategy",
    "NoiseModel",
    "PartitionConfig",
    "QromSpec",
    "RECURSIVE",
    "Register",
    "Uncompute",
    "VCHAIN",
    "build",
    "build_naive",
    "build_predecoded",
    "build_sawtooth",
    "compile",
    "concat",
    "depth",
    "dumps",
    "enumerate_configs",
    "format_config",
    "gate_counts",
    "loads",
    "new_circuit",
    "optimal_config",
    "parse_config",
    "qubit_overhead",
    "read_fidelity",
    "route",
    "run_shots",
    "run_statevector",
    "to_basis",
    "unitary_of",
]
