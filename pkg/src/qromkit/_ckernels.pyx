# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: ASAP depth and the sparse Pauli-trajectory engine.

Mirrors ``_pykernels`` gate for gate; both must agree on every sample.
"""
from libc.stdlib cimport malloc, realloc, free, calloc, qsort
from libc.math cimport cos, sin, sqrt

import numpy as np

ctypedef unsigned long long u64

cdef double PRUNE = 1e-24
cdef double DET_EPS = 1e-12

cdef enum:
    C_X = 0
    C_SX = 1
    C_ID = 2
    C_RZ = 3
    C_CX = 6
    C_RESET = 10


cdef struct Term:
    u64 idx
    double re
    double im


cdef struct Outcome:
    long long key
    double p


cdef struct State:
    Term* t
    Py_ssize_t n
    Py_ssize_t cap
    Term* buf
    Py_ssize_t bcap


cdef int cmp_term(const void* a, const void* b) noexcept nogil:
    cdef u64 x = (<Term*>a).idx
    cdef u64 y = (<Term*>b).idx
    return (x > y) - (x < y)


cdef int cmp_outcome(const void* a, const void* b) noexcept nogil:
    cdef long long x = (<Outcome*>a).key
    cdef long long y = (<Outcome*>b).key
    return (x > y) - (x < y)


cdef int grow(Term** arr, Py_ssize_t* cap, Py_ssize_t need) except -1:
    cdef Py_ssize_t c = cap[0]
    cdef Term* p
    if need <= c:
        return 0
    while c < need:
        c *= 2
    p = <Term*>realloc(arr[0], c * sizeof(Term))
    if p == NULL:
        raise MemoryError()
    arr[0] = p
    cap[0] = c
    return 0


cdef int state_init(State* st, u64 init) except -1:
    st.cap = 16
    st.bcap = 16
    st.t = <Term*>malloc(st.cap * sizeof(Term))
    st.buf = <Term*>malloc(st.bcap * sizeof(Term))
    if st.t == NULL or st.buf == NULL:
        raise MemoryError()
    st.n = 1
    st.t[0].idx = init
    st.t[0].re = 1.0
    st.t[0].im = 0.0
    return 0


cdef void state_free(State* st) noexcept:
    free(st.t)
    free(st.buf)


cdef void pauli(State* st, int q, int p) noexcept nogil:
    cdef u64 m = (<u64>1) << q
    cdef Py_ssize_t i
    cdef double re, im
    for i in range(st.n):
        if p == 1:
            st.t[i].idx ^= m
        elif p == 2:
            re = st.t[i].re
            im = st.t[i].im
            if st.t[i].idx & m:
                # -i * a
                st.t[i].re = im
                st.t[i].im = -re
            else:
                st.t[i].re = -im
                st.t[i].im = re
            st.t[i].idx ^= m
        else:
            if st.t[i].idx & m:
                st.t[i].re = -st.t[i].re
                st.t[i].im = -st.t[i].im


cdef Py_ssize_t find(Term* t, Py_ssize_t n, u64 key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if t[mid].idx < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < n and t[lo].idx == key:
        return lo
    return -1


cdef inline void push(Term* out, Py_ssize_t* k, u64 idx, double re, double im) noexcept nogil:
    if re * re + im * im > PRUNE:
        out[k[0]].idx = idx
        out[k[0]].re = re
        out[k[0]].im = im
        k[0] += 1


cdef int apply_sx(State* st, int q) except -1:
    # SX = 0.5 * [[1+i, 1-i], [1-i, 1+i]]
    cdef u64 m = (<u64>1) << q
    cdef Py_ssize_t i, j, k = 0
    cdef double ar, ai, br, bi, r0, i0, r1, i1
    cdef Term* tmp
    grow(&st.buf, &st.bcap, 2 * st.n)
    if st.n > 1:
        qsort(st.t, st.n, sizeof(Term), cmp_term)
    for i in range(st.n):
        if st.t[i].idx & m:
            if st.n > 1 and find(st.t, st.n, st.t[i].idx & ~m) >= 0:
                continue
            ar = 0.0
            ai = 0.0
            br = st.t[i].re
            bi = st.t[i].im
        else:
            ar = st.t[i].re
            ai = st.t[i].im
            j = find(st.t, st.n, st.t[i].idx | m) if st.n > 1 else -1
            if j >= 0:
                br = st.t[j].re
                bi = st.t[j].im
            else:
                br = 0.0
                bi = 0.0
        # out0 = (1+i)/2 a + (1-i)/2 b ; out1 = (1-i)/2 a + (1+i)/2 b
        r0 = 0.5 * (ar - ai + br + bi)
        i0 = 0.5 * (ar + ai - br + bi)
        r1 = 0.5 * (ar + ai + br - bi)
        i1 = 0.5 * (-ar + ai + br + bi)
        push(st.buf, &k, st.t[i].idx & ~m, r0, i0)
        push(st.buf, &k, st.t[i].idx | m, r1, i1)
    tmp = st.t
    st.t = st.buf
    st.buf = tmp
    i = st.cap
    st.cap = st.bcap
    st.bcap = i
    st.n = k
    return 0


cdef bint apply_reset(State* st, int q, double u) noexcept nogil:
    cdef u64 m = (<u64>1) << q
    cdef Py_ssize_t i, k = 0
    cdef double total = 0.0, p1 = 0.0, w, frac, norm, scale
    cdef bint keep_one, stochastic = False
    for i in range(st.n):
        w = st.t[i].re * st.t[i].re + st.t[i].im * st.t[i].im
        total += w
        if st.t[i].idx & m:
            p1 += w
    frac = p1 / total
    if frac < DET_EPS:
        keep_one = False
    elif frac > 1.0 - DET_EPS:
        keep_one = True
    else:
        stochastic = True
        keep_one = u < frac
    norm = p1 if keep_one else total - p1
    scale = 1.0 / sqrt(norm)
    for i in range(st.n):
        if ((st.t[i].idx & m) != 0) == keep_one:
            st.t[k].idx = st.t[i].idx & ~m
            st.t[k].re = st.t[i].re * scale
            st.t[k].im = st.t[i].im * scale
            k += 1
    st.n = k
    return stochastic


cdef int evolve(State* st, const unsigned char[::1] code, const int[::1] q0, const int[::1] q1,
                const double[::1] theta, const long long[::1] err_pos, const signed char[::1] err_code,
                Py_ssize_t e0, Py_ssize_t e1, const double[::1] uniforms, Py_ssize_t* nres,
                bint* stochastic) except -1:
    cdef Py_ssize_t g, i, e = e0, r = 0
    cdef Py_ssize_t ng = code.shape[0]
    cdef int c, a, p
    cdef u64 m, mt
    cdef double cr, ci, re, im
    for g in range(ng):
        c = code[g]
        a = q0[g]
        if c == C_X:
            m = (<u64>1) << a
            for i in range(st.n):
                st.t[i].idx ^= m
        elif c == C_CX:
            m = (<u64>1) << a
            mt = (<u64>1) << q1[g]
            for i in range(st.n):
                if st.t[i].idx & m:
                    st.t[i].idx ^= mt
        elif c == C_RZ:
            m = (<u64>1) << a
            cr = cos(0.5 * theta[g])
            ci = sin(0.5 * theta[g])
            for i in range(st.n):
                re = st.t[i].re
                im = st.t[i].im
                if st.t[i].idx & m:
                    st.t[i].re = re * cr - im * ci
                    st.t[i].im = re * ci + im * cr
                else:
                    st.t[i].re = re * cr + im * ci
                    st.t[i].im = im * cr - re * ci
        elif c == C_SX:
            apply_sx(st, a)
        elif c == C_RESET:
            if apply_reset(st, a, uniforms[r]):
                stochastic[0] = True
            r += 1
        elif c != C_ID:
            raise ValueError(f"non-basis gate code {c} in trajectory kernel")
        while e < e1 and err_pos[e] == g:
            p = err_code[e]
            if c == C_CX:
                if p & 3:
                    pauli(st, a, p & 3)
                if p >> 2:
                    pauli(st, q1[g], p >> 2)
            else:
                pauli(st, a, p)
            e += 1
    nres[0] = r
    return 0


cdef Py_ssize_t marginal(State* st, const int[::1] meas, Outcome* out) noexcept nogil:
    cdef Py_ssize_t i, j, k = 0
    cdef long long key
    for i in range(st.n):
        key = 0
        for j in range(meas.shape[0]):
            if (st.t[i].idx >> meas[j]) & 1:
                key |= (<long long>1) << j
        out[i].key = key
        out[i].p = st.t[i].re * st.t[i].re + st.t[i].im * st.t[i].im
    if st.n > 1:
        qsort(out, st.n, sizeof(Outcome), cmp_outcome)
    for i in range(st.n):
        if k > 0 and out[k - 1].key == out[i].key:
            out[k - 1].p += out[i].p
        else:
            out[k] = out[i]
            k += 1
    return k


def asap_depth(const long long[::1] qptr, const int[::1] qubits, int num_qubits):
    cdef Py_ssize_t ng = qptr.shape[0] - 1, g, j
    cdef long long m, best = 0
    cdef long long* layer = <long long*>calloc(max(num_qubits, 1), sizeof(long long))
    if layer == NULL:
        raise MemoryError()
    with nogil:
        for g in range(ng):
            m = 0
            for j in range(qptr[g], qptr[g + 1]):
                if layer[qubits[j]] > m:
                    m = layer[qubits[j]]
            m += 1
            for j in range(qptr[g], qptr[g + 1]):
                layer[qubits[j]] = m
            if m > best:
                best = m
    free(layer)
    return int(best)


def trajectory_distribution(const unsigned char[::1] code, const int[::1] q0, const int[::1] q1,
                            const double[::1] theta, long long init_index,
                            const long long[::1] err_pos, const signed char[::1] err_code,
                            const double[::1] uniforms, const int[::1] meas):
    cdef State st
    cdef Py_ssize_t nres = 0, k, i
    cdef bint stochastic = False
    cdef Outcome* out
    state_init(&st, <u64>init_index)
    try:
        evolve(&st, code, q0, q1, theta, err_pos, err_code, 0, err_pos.shape[0], uniforms,
               &nres, &stochastic)
        out = <Outcome*>malloc(max(st.n, 1) * sizeof(Outcome))
        k = marginal(&st, meas, out)
        keys = np.empty(k, dtype=np.int64)
        probs = np.empty(k, dtype=np.float64)
        for i in range(k):
            keys[i] = out[i].key
            probs[i] = out[i].p
        free(out)
    finally:
        state_free(&st)
    return keys, probs, bool(stochastic)


def run_batch(const unsigned char[::1] code, const int[::1] q0, const int[::1] q1,
              const double[::1] theta, long long init_index, const long long[::1] err_ptr,
              const long long[::1] err_pos, const signed char[::1] err_code,
              const double[:, ::1] uniforms, const int[::1] meas):
    cdef Py_ssize_t shots = uniforms.shape[0], s, k, i, nres
    cdef bint stochastic
    cdef State st
    cdef Outcome* out = NULL
    cdef Py_ssize_t ocap = 0
    cdef double total, target, acc
    cdef long long[::1] res
    outcomes = np.zeros(shots, dtype=np.int64)
    res = outcomes
    for s in range(shots):
        state_init(&st, <u64>init_index)
        try:
            stochastic = False
            evolve(&st, code, q0, q1, theta, err_pos, err_code, err_ptr[s], err_ptr[s + 1],
                   uniforms[s], &nres, &stochastic)
            if st.n > ocap:
                ocap = st.n
                free(out)
                out = <Outcome*>malloc(ocap * sizeof(Outcome))
                if out == NULL:
                    raise MemoryError()
            k = marginal(&st, meas, out)
            total = 0.0
            for i in range(k):
                total += out[i].p
            target = uniforms[s, nres] * total
            acc = 0.0
            res[s] = out[k - 1].key
            for i in range(k):
                acc += out[i].p
                if acc > target:
                    res[s] = out[i].key
                    break
        finally:
            state_free(&st)
    free(out)
    return outcomes
