"""Dense tensor-contraction gate application.

Backs ``unitary_of`` and the noiseless ``run_statevector``. States are arrays
of shape ``(2,) * n + batch``; qubit ``q`` lives on axis ``n - 1 - q``.
"""
from __future__ import annotations

import numpy as np

from .circuit import CircuitError, GateKind, Kind

_S2 = 1 / np.sqrt(2)
_HADAMARD = np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex)
_FIXED = {
    Kind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Kind.SX: 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]),
    Kind.ID: np.eye(2, dtype=complex),
    Kind.H: _HADAMARD,
    Kind.CX: np.array([[0, 1], [1, 0]], dtype=complex),
    Kind.CCX: np.array([[0, 1], [1, 0]], dtype=complex),
    Kind.MCX: np.array([[0, 1], [1, 0]], dtype=complex),
}


def root_matrix(s: int, dagger: bool = False) -> np.ndarray:
    """Principal X**(1/2**s)."""
    m = _HADAMARD @ np.diag([1, np.exp(1j * np.pi / 2**s)]) @ _HADAMARD
    return m.conj().T if dagger else m


def target_matrix(kind: GateKind) -> np.ndarray:
    """2x2 operator applied to the last qubit when all others (controls) are 1."""
    if kind.code is Kind.RZ:
        return np.diag([np.exp(-0.5j * kind.theta), np.exp(0.5j * kind.theta)])
    if kind.code is Kind.MCX_ROOT:
        return root_matrix(kind.s, kind.dagger)
    try:
        return _FIXED[kind.code]
    except KeyError:
        raise CircuitError(f"{kind!r} is not a controlled single-qubit operator") from None


def apply_gate(psi: np.ndarray, n: int, kind: GateKind, qubits) -> np.ndarray:
    if kind.code is Kind.SWAP:
        a, b = qubits
        return np.swapaxes(psi, n - 1 - a, n - 1 - b).copy()
    if kind.code in (Kind.RESET, Kind.MEASURE):
        raise CircuitError(f"{kind!r} is not unitary")
    u = target_matrix(kind)
    *controls, target = qubits
    idx0: list = [slice(None)] * psi.ndim
    for c in controls:
        idx0[n - 1 - c] = 1
    idx1 = list(idx0)
    idx0[n - 1 - target] = 0
    idx1[n - 1 - target] = 1
    i0, i1 = tuple(idx0), tuple(idx1)
    a0 = psi[i0].copy()
    a1 = psi[i1].copy()
    psi[i0] = u[0, 0] * a0 + u[0, 1] * a1
    psi[i1] = u[1, 0] * a0 + u[1, 1] * a1
    return psi


def prob_one(psi: np.ndarray, n: int, q: int) -> float:
    idx: list = [slice(None)] * psi.ndim
    idx[n - 1 - q] = 1
    return float(np.sum(np.abs(psi[tuple(idx)]) ** 2))
