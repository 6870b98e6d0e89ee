"""Minimal statevector simulator: Rx/Ry/Rz rotations, CNOT, Pauli-Z expectations.

Conventions
-----------
* Qubit 0 is the least-significant bit of the basis-state index, so for a
  basis state with index ``i`` the value of qubit ``q`` is ``(i >> q) & 1``.
* Amplitudes are complex128; gates act in place over amplitude pairs with
  stride ``2**qubit`` instead of building full ``2**n x 2**n`` matrices.
* Expectation values are computed analytically from the amplitudes; there is
  no shot sampling.

Gate matrices (column-major action on the target qubit's amplitude pair):

    Rx(t) = [[cos(t/2), -i sin(t/2)], [-i sin(t/2), cos(t/2)]]
    Ry(t) = [[cos(t/2),   -sin(t/2)], [   sin(t/2), cos(t/2)]]
    Rz(t) = [[exp(-i t/2),        0], [          0, exp(i t/2)]]
    CNOT flips the target bit of every basis state whose control bit is 1.

Most functions also exist in a ``batch_*`` form operating on a stack of
independent statevectors shaped ``(rows, 2**n)``, with optionally a distinct
rotation angle per row.  The batched kernels are what the hybrid Q-network
uses in its training hot path; the scalar API defines the semantics.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

MAX_QUBITS = 20


class QuantumState:
    """Statevector of ``n_qubits`` qubits: ``2**n_qubits`` complex amplitudes.

    Value-semantic: use :meth:`copy` before handing a state to code that
    applies gates, since gates mutate in place.
    """

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits: int, amplitudes: np.ndarray):
        self.n_qubits = n_qubits
        self.amplitudes = amplitudes

    def copy(self) -> "QuantumState":
        return QuantumState(self.n_qubits, self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def __repr__(self) -> str:  # pragma: no cover
        return f"QuantumState(n_qubits={self.n_qubits}, amplitudes={self.amplitudes!r})"


def new_state(n_qubits: int) -> QuantumState:
    """Prepare |0...0>: amplitude 1 on basis index 0."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(n_qubits, amps)


def _check_qubit(state: QuantumState, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")


def _check_angle(angle: float) -> float:
    angle = float(angle)
    if not math.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle}")
    return angle


def _pair_view(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """View of ``amps`` with the target qubit's bit isolated on axis -2.

    Leading axes (e.g. a batch axis) are preserved; the trailing ``2**n``
    axis becomes ``(2**(n-q-1), 2, 2**q)``.
    """
    lead = amps.shape[:-1]
    return amps.reshape(lead + (2 ** (n_qubits - qubit - 1), 2, 2**qubit))


def _rot_inplace(amps: np.ndarray, qubit: int, n_qubits: int, m00, m01, m10, m11) -> None:
    """Apply [[m00, m01], [m10, m11]] to the qubit's amplitude pairs in place.

    Matrix entries may be scalars or arrays broadcastable against the
    leading (batch) axes reshaped to (..., 1, 1).
    """
    view = _pair_view(amps, qubit, n_qubits)
    a0 = view[..., 0, :]
    a1 = view[..., 1, :]
    new0 = m00 * a0 + m01 * a1
    view[..., 1, :] = m10 * a0 + m11 * a1
    view[..., 0, :] = new0


def apply_rx(state: QuantumState, qubit: int, angle: float) -> QuantumState:
    """Rotate ``qubit`` about the x axis by ``angle`` radians (in place)."""
    _check_qubit(state, qubit)
    angle = _check_angle(angle)
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    _rot_inplace(state.amplitudes, qubit, state.n_qubits, c, -1j * s, -1j * s, c)
    return state


def apply_ry(state: QuantumState, qubit: int, angle: float) -> QuantumState:
    """Rotate ``qubit`` about the y axis by ``angle`` radians (in place)."""
    _check_qubit(state, qubit)
    angle = _check_angle(angle)
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    _rot_inplace(state.amplitudes, qubit, state.n_qubits, c, -s, s, c)
    return state


def apply_rz(state: QuantumState, qubit: int, angle: float) -> QuantumState:
    """Rotate ``qubit`` about the z axis by ``angle`` radians (in place)."""
    _check_qubit(state, qubit)
    angle = _check_angle(angle)
    phase = complex(math.cos(angle / 2), math.sin(angle / 2))
    _rot_inplace(state.amplitudes, qubit, state.n_qubits, phase.conjugate(), 0.0, 0.0, phase)
    return state


@lru_cache(maxsize=None)
def _cnot_perm(n_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    control_set = (idx >> control) & 1 == 1
    return np.where(control_set, idx ^ (1 << target), idx)


def apply_cnot(state: QuantumState, control: int, target: int) -> QuantumState:
    """Flip ``target``'s bit on every basis state whose ``control`` bit is 1."""
    if control == target:
        raise ValueError("control and target qubits must differ")
    _check_qubit(state, control)
    _check_qubit(state, target)
    perm = _cnot_perm(state.n_qubits, control, target)
    state.amplitudes = state.amplitudes[perm]
    return state


@lru_cache(maxsize=None)
def _z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    return (1.0 - 2.0 * ((idx >> qubit) & 1)).astype(np.float64)


def expect_z(state: QuantumState, qubit: int) -> float:
    """Pauli-Z expectation of ``qubit``: +1 weight on bit 0, -1 on bit 1."""
    _check_qubit(state, qubit)
    probs = np.abs(state.amplitudes) ** 2
    return float(probs @ _z_signs(state.n_qubits, qubit))


def parameter_shift(circuit_eval: Callable[[float], float], angle: float) -> float:
    """Exact derivative of a rotation-generated expectation at ``angle``.

    ``circuit_eval`` maps one rotation angle (all other circuit parameters
    held fixed) to an expectation value.  For circuits built from Rx/Ry/Rz
    generators the two-point rule below is the exact derivative, not an
    approximation.
    """
    angle = _check_angle(angle)
    plus = circuit_eval(angle + math.pi / 2)
    minus = circuit_eval(angle - math.pi / 2)
    if not (math.isfinite(plus) and math.isfinite(minus)):
        raise FloatingPointError(
            f"circuit evaluation returned non-finite value: {plus}, {minus}"
        )
    return (plus - minus) / 2.0


# ---------------------------------------------------------------------------
# Batched kernels: rows of independent statevectors, shape (rows, 2**n).
# Rotation angles may be a scalar (shared by all rows) or an array of
# per-row angles.  No argument validation: callers own the hot path.
# ---------------------------------------------------------------------------


def batch_zero_state(rows: int, n_qubits: int) -> np.ndarray:
    amps = np.zeros((rows, 2**n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    return amps


def _batch_trig(angles, rows: int):
    half = np.asarray(angles, dtype=np.float64) / 2.0
    c, s = np.cos(half), np.sin(half)
    if c.ndim:  # per-row angles: broadcast over the pair view's trailing axes
        c = c.reshape(rows, 1, 1)
        s = s.reshape(rows, 1, 1)
    return c, s


def batch_rx(amps: np.ndarray, qubit: int, n_qubits: int, angles) -> None:
    c, s = _batch_trig(angles, amps.shape[0])
    _rot_inplace(amps, qubit, n_qubits, c, -1j * s, -1j * s, c)


def batch_ry(amps: np.ndarray, qubit: int, n_qubits: int, angles) -> None:
    c, s = _batch_trig(angles, amps.shape[0])
    _rot_inplace(amps, qubit, n_qubits, c, -s, s, c)


def batch_rz(amps: np.ndarray, qubit: int, n_qubits: int, angles) -> None:
    c, s = _batch_trig(angles, amps.shape[0])
    _rot_inplace(amps, qubit, n_qubits, c - 1j * s, 0.0, 0.0, c + 1j * s)


def batch_cnot(amps: np.ndarray, control: int, target: int, n_qubits: int) -> np.ndarray:
    return amps[:, _cnot_perm(n_qubits, control, target)]


def batch_expect_z(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Per-row Pauli-Z expectation, shape (rows,)."""
    probs = amps.real**2 + amps.imag**2
    return probs @ _z_signs(n_qubits, qubit)


# Pauli applications (new arrays), used by gradient code: X, Y, Z generators
# of the rotation gates above.


def batch_pauli_x(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    view = _pair_view(amps, qubit, n_qubits)
    out = np.empty_like(view)
    out[..., 0, :] = view[..., 1, :]
    out[..., 1, :] = view[..., 0, :]
    return out.reshape(amps.shape)


def batch_pauli_y(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    view = _pair_view(amps, qubit, n_qubits)
    out = np.empty_like(view)
    out[..., 0, :] = -1j * view[..., 1, :]
    out[..., 1, :] = 1j * view[..., 0, :]
    return out.reshape(amps.shape)


def batch_pauli_z(amps: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    view = _pair_view(amps, qubit, n_qubits)
    out = view.copy()
    out[..., 1, :] *= -1.0
    return out.reshape(amps.shape)
