"""Pure-Python kernels; the fallback when the compiled extension is absent.

The sparse trajectory engine keeps a dict ``basis index -> amplitude``. QROM
circuits started from basis states stay close to classical, so the dict
rarely holds more than a handful of entries.
"""
from __future__ import annotations

import cmath

import numpy as np

# basis codes shared with circuit.Kind
X, SX, ID, RZ, CX, RESET = 0, 1, 2, 3, 6, 10
PRUNE = 1e-24
DETERMINISTIC_EPS = 1e-12

_SX00 = 0.5 + 0.5j
_SX01 = 0.5 - 0.5j


def asap_depth(qptr, qubits, num_qubits: int) -> int:
    layer = [0] * num_qubits
    ptr = qptr.tolist()
    qs = qubits.tolist()
    best = 0
    for i in range(len(ptr) - 1):
        gq = qs[ptr[i]:ptr[i + 1]]
        m = max(layer[q] for q in gq) + 1
        for q in gq:
            layer[q] = m
        if m > best:
            best = m
    return best


def _pauli(state: dict, q: int, p: int) -> dict:
    m = 1 << q
    if p == 1:
        return {i ^ m: a for i, a in state.items()}
    if p == 2:
        return {i ^ m: (a * -1j if i & m else a * 1j) for i, a in state.items()}
    return {i: (-a if i & m else a) for i, a in state.items()}


def _sx(state: dict, q: int) -> dict:
    m = 1 << q
    out: dict = {}
    for i, a in state.items():
        i0 = i & ~m
        i1 = i0 | m
        if i & m:
            out[i0] = out.get(i0, 0) + a * _SX01
            out[i1] = out.get(i1, 0) + a * _SX00
        else:
            out[i0] = out.get(i0, 0) + a * _SX00
            out[i1] = out.get(i1, 0) + a * _SX01
    return {i: a for i, a in out.items() if (a.real * a.real + a.imag * a.imag) > PRUNE}


def _reset(state: dict, q: int, u: float) -> tuple[dict, bool]:
    m = 1 << q
    total = 0.0
    p1 = 0.0
    for i, a in state.items():
        w = a.real * a.real + a.imag * a.imag
        total += w
        if i & m:
            p1 += w
    frac = p1 / total
    stochastic = False
    if frac < DETERMINISTIC_EPS:
        keep_one = False
    elif frac > 1 - DETERMINISTIC_EPS:
        keep_one = True
    else:
        stochastic = True
        keep_one = u < frac
    if keep_one:
        kept = {i & ~m: a for i, a in state.items() if i & m}
        norm = p1
    else:
        kept = {i: a for i, a in state.items() if not i & m}
        norm = total - p1
    scale = 1 / np.sqrt(norm)
    return {i: a * scale for i, a in kept.items()}, stochastic


def _evolve(code, q0, q1, theta, init_index, err_pos, err_code, uniforms):
    state = {int(init_index): 1 + 0j}
    ne = len(err_pos)
    e = 0
    r = 0
    stochastic = False
    for g in range(len(code)):
        c = code[g]
        a = q0[g]
        if c == X:
            m = 1 << a
            state = {i ^ m: v for i, v in state.items()}
        elif c == CX:
            mc = 1 << a
            mt = 1 << q1[g]
            state = {(i ^ mt if i & mc else i): v for i, v in state.items()}
        elif c == RZ:
            m = 1 << a
            lo = cmath.exp(-0.5j * theta[g])
            hi = cmath.exp(0.5j * theta[g])
            state = {i: v * (hi if i & m else lo) for i, v in state.items()}
        elif c == SX:
            state = _sx(state, a)
        elif c == RESET:
            state, st = _reset(state, a, uniforms[r])
            stochastic = stochastic or st
            r += 1
        elif c != ID:
            raise ValueError(f"non-basis gate code {c} in trajectory kernel")
        while e < ne and err_pos[e] == g:
            p = err_code[e]
            if c == CX:
                if p & 3:
                    state = _pauli(state, a, p & 3)
                if p >> 2:
                    state = _pauli(state, q1[g], p >> 2)
            else:
                state = _pauli(state, a, p)
            e += 1
    return state, r, stochastic


def _marginal(state: dict, meas) -> tuple[list[int], list[float]]:
    dist: dict[int, float] = {}
    for i, a in state.items():
        out = 0
        for j, q in enumerate(meas):
            if (i >> q) & 1:
                out |= 1 << j
        dist[out] = dist.get(out, 0.0) + a.real * a.real + a.imag * a.imag
    keys = sorted(dist)
    return keys, [dist[k] for k in keys]


def _sample(keys, probs, u: float) -> int:
    total = sum(probs)
    target = u * total
    acc = 0.0
    for k, p in zip(keys, probs):
        acc += p
        if acc > target:
            return k
    return keys[-1]


def _lists(code, q0, q1, theta):
    return code.tolist(), q0.tolist(), q1.tolist(), theta.tolist()


def trajectory_distribution(code, q0, q1, theta, init_index, err_pos, err_code, uniforms, meas):
    """Outcome distribution of one trajectory (resets consume ``uniforms``)."""
    c, a, b, t = _lists(code, q0, q1, theta)
    state, _, stochastic = _evolve(c, a, b, t, init_index, err_pos.tolist(), err_code.tolist(),
                                   uniforms.tolist())
    keys, probs = _marginal(state, meas.tolist())
    return np.array(keys, dtype=np.int64), np.array(probs), stochastic


def run_batch(code, q0, q1, theta, init_index, err_ptr, err_pos, err_code, uniforms, meas):
    """Sample one outcome per shot; shot i uses errors ``err_ptr[i]:err_ptr[i+1]``."""
    c, a, b, t = _lists(code, q0, q1, theta)
    mlist = meas.tolist()
    ptr = err_ptr.tolist()
    pos = err_pos.tolist()
    ecode = err_code.tolist()
    shots = uniforms.shape[0]
    outcomes = np.zeros(shots, dtype=np.int64)
    for s in range(shots):
        u = uniforms[s].tolist()
        state, r, _ = _evolve(c, a, b, t, init_index, pos[ptr[s]:ptr[s + 1]],
                              ecode[ptr[s]:ptr[s + 1]], u)
        keys, probs = _marginal(state, mlist)
        outcomes[s] = _sample(keys, probs, u[r])
    return outcomes
