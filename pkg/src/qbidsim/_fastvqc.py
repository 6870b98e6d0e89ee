"""Compiled (numba) twin of the circuit forward pass and adjoint sweep.

The numpy implementations in ``hybridnet`` spend their time in per-gate
call overhead: one 5-qubit circuit is only 32 amplitudes, but a training run
evaluates it millions of times.  These kernels run the identical algorithm
as explicit loops under ``numba.njit``; ``hybridnet`` falls back to the
numpy path when numba is unavailable (QBIDSIM_NO_JIT=1 also disables it).

Layout conventions match ``qsim``: qubit 0 is the least-significant bit of
the amplitude index, encodings enter as one Rx per qubit, then each block
applies Rx, Ry, Rz per qubit followed by the CNOT ladder 0->1 .. 3->4.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly by the dispatch tests
    if os.environ.get("QBIDSIM_NO_JIT"):
        raise ImportError("jit disabled via QBIDSIM_NO_JIT")
    from numba import njit

    HAVE_JIT = True
except ImportError:  # pragma: no cover
    HAVE_JIT = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _rot(amps, row, qubit, kind, theta, dim):
    """Apply Rx/Ry/Rz (kind 0/1/2) to one row, in place."""
    half = theta / 2.0
    c = np.cos(half)
    s = np.sin(half)
    step = 1 << qubit
    for base in range(0, dim, 2 * step):
        for low in range(step):
            i0 = base + low
            i1 = i0 + step
            a0 = amps[row, i0]
            a1 = amps[row, i1]
            if kind == 0:  # Rx
                amps[row, i0] = c * a0 - 1j * s * a1
                amps[row, i1] = -1j * s * a0 + c * a1
            elif kind == 1:  # Ry
                amps[row, i0] = c * a0 - s * a1
                amps[row, i1] = s * a0 + c * a1
            else:  # Rz
                amps[row, i0] = (c - 1j * s) * a0
                amps[row, i1] = (c + 1j * s) * a1


@njit(cache=True)
def _cnot(amps, row, control, target, dim):
    cbit = 1 << control
    tbit = 1 << target
    for i in range(dim):
        if (i & cbit) != 0 and (i & tbit) == 0:
            j = i | tbit
            tmp = amps[row, i]
            amps[row, i] = amps[row, j]
            amps[row, j] = tmp


@njit(cache=True)
def _forward_row(amps, row, enc, angles, n_qubits, depth, dim):
    amps[row, 0] = 1.0
    for q in range(n_qubits):
        _rot(amps, row, q, 0, enc[row, q], dim)
    for block in range(depth):
        for q in range(n_qubits):
            _rot(amps, row, q, 0, angles[block, q, 0], dim)
            _rot(amps, row, q, 1, angles[block, q, 1], dim)
            _rot(amps, row, q, 2, angles[block, q, 2], dim)
        for q in range(n_qubits - 1):
            _cnot(amps, row, q, q + 1, dim)


@njit(cache=True)
def vqc_raw_jit(enc, angles):
    """Pauli-Z expectations, shape (rows, n_qubits)."""
    rows = enc.shape[0]
    depth = angles.shape[0]
    n_qubits = angles.shape[1]
    dim = 1 << n_qubits
    amps = np.zeros((rows, dim), dtype=np.complex128)
    raw = np.empty((rows, n_qubits))
    for row in range(rows):
        _forward_row(amps, row, enc, angles, n_qubits, depth, dim)
        for q in range(n_qubits):
            total = 0.0
            bit = 1 << q
            for i in range(dim):
                a = amps[row, i]
                p = a.real * a.real + a.imag * a.imag
                if (i & bit) == 0:
                    total += p
                else:
                    total -= p
            raw[row, q] = total
    return raw


@njit(cache=True)
def _pauli_overlap(lam, phi, row, qubit, kind, dim):
    """Im(<lam_row| P |phi_row>) for P = X, Y, Z (kind 0/1/2) on qubit."""
    bit = 1 << qubit
    acc = 0.0 + 0.0j
    if kind == 0:  # X: swaps the pair
        for i in range(dim):
            acc += np.conj(lam[row, i]) * phi[row, i ^ bit]
    elif kind == 1:  # Y: (Yv)_0 = -i v_1, (Yv)_1 = i v_0
        for i in range(dim):
            if (i & bit) == 0:
                acc += np.conj(lam[row, i]) * (-1j) * phi[row, i | bit]
            else:
                acc += np.conj(lam[row, i]) * 1j * phi[row, i ^ bit]
    else:  # Z: signs
        for i in range(dim):
            if (i & bit) == 0:
                acc += np.conj(lam[row, i]) * phi[row, i]
            else:
                acc -= np.conj(lam[row, i]) * phi[row, i]
    return acc.imag


@njit(cache=True)
def vqc_vjp_jit(enc, angles, w):
    """(d_enc, d_angles, raw): adjoint sweep of sum_m w[r, m] <Z_m> per row.

    d_enc[r, q] is per row; d_angles is summed over rows.  The full forward
    state stack is rebuilt internally, gate by gate.
    """
    rows = enc.shape[0]
    depth = angles.shape[0]
    n_qubits = angles.shape[1]
    dim = 1 << n_qubits
    n_gates = n_qubits + depth * (3 * n_qubits + (n_qubits - 1))

    amps = np.zeros((rows, dim), dtype=np.complex128)
    states = np.zeros((n_gates + 1, rows, dim), dtype=np.complex128)
    raw = np.empty((rows, n_qubits))
    d_enc = np.zeros((rows, n_qubits))
    d_angles = np.zeros((depth, n_qubits, 3))

    # gate table: kind (0 rx, 1 ry, 2 rz, 3 cnot), qubit/control, angle slot
    gates = np.empty((n_gates, 3), dtype=np.int64)
    g = 0
    for q in range(n_qubits):
        gates[g, 0] = 0
        gates[g, 1] = q
        gates[g, 2] = -1 - q  # encoding slot
        g += 1
    for block in range(depth):
        for q in range(n_qubits):
            for comp in range(3):
                gates[g, 0] = comp
                gates[g, 1] = q
                gates[g, 2] = (block * n_qubits + q) * 3 + comp
                g += 1
        for q in range(n_qubits - 1):
            gates[g, 0] = 3
            gates[g, 1] = q
            gates[g, 2] = q + 1
            g += 1

    flat = angles.ravel()
    for row in range(rows):
        amps[row, 0] = 1.0
    states[0] = amps
    for k in range(n_gates):
        kind = gates[k, 0]
        q = gates[k, 1]
        slot = gates[k, 2]
        for row in range(rows):
            if kind == 3:
                _cnot(amps, row, q, slot, dim)
            else:
                theta = enc[row, -slot - 1] if slot < 0 else flat[slot]
                _rot(amps, row, q, kind, theta, dim)
        states[k + 1] = amps

    for row in range(rows):
        for q in range(n_qubits):
            total = 0.0
            bit = 1 << q
            for i in range(dim):
                a = amps[row, i]
                p = a.real * a.real + a.imag * a.imag
                if (i & bit) == 0:
                    total += p
                else:
                    total -= p
            raw[row, q] = total

    # lam = (sum_m w_m Z_m) |psi>, diagonal observable
    lam = np.zeros((rows, dim), dtype=np.complex128)
    for row in range(rows):
        for i in range(dim):
            diag = 0.0
            for m in range(n_qubits):
                if (i >> m) & 1 == 0:
                    diag += w[row, m]
                else:
                    diag -= w[row, m]
            lam[row, i] = diag * states[n_gates, row, i]

    for k in range(n_gates - 1, -1, -1):
        kind = gates[k, 0]
        q = gates[k, 1]
        slot = gates[k, 2]
        if kind == 3:
            for row in range(rows):
                _cnot(lam, row, q, slot, dim)
            continue
        for row in range(rows):
            grad = _pauli_overlap(lam, states[k + 1], row, q, kind, dim)
            if slot < 0:
                d_enc[row, -slot - 1] = grad
                theta = enc[row, -slot - 1]
            else:
                d_angles[slot // (3 * n_qubits), (slot // 3) % n_qubits, slot % 3] += grad
                theta = flat[slot]
            _rot(lam, row, q, kind, -theta, dim)
    return d_enc, d_angles, raw
