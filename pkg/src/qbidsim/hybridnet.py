"""Q-function backends: a plain MLP and a hybrid dense/quantum network.

The hybrid network is a dense stack with a 5-qubit variational circuit in the
middle:

    input_fc (tanh) -> align_in (tanh) -> scale to [0, pi] -> circuit
    -> Pauli-Z expectations rescaled to [0, 1] -> align_out -> output_fc

The circuit starts from |00000>, encodes each input component as an Rx
rotation on its qubit, then runs ``depth`` variational blocks.  A block
applies trainable Rx, Ry, Rz rotations (in that order) on every qubit and
entangles neighbours with a CNOT ladder 0->1, 1->2, 2->3, 3->4.

Losses use a frozen target copy of the network; gradients of all classical
weights are analytic backprop.  Circuit-angle gradients come in two exact
flavours selected by ``gradients(..., method=...)``:

* ``"shift"``  - the two-point parameter-shift rule per angle, evaluating the
  whole circuit at angle +/- pi/2.  This is the reference realization.
* ``"adjoint"`` - a reverse sweep over the cached forward states that yields
  the same derivatives (to machine precision) in O(gates) instead of
  O(gates * parameters).  Default, since training performs thousands of
  gradient steps.

Both are verified against central finite differences in the test suite.
"""

from __future__ import annotations

import copy
import json
import math
from collections import namedtuple
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import _fastvqc, qsim

ACTIVATIONS = ("tanh", "identity")

# One network output per discrete action.
QValues = np.ndarray


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    biases: np.ndarray  # (out_dim,)
    activation: str = "tanh"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ValueError("weights must be (out, in) with matching bias length")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng, activation: str = "tanh"):
        bound = 1.0 / math.sqrt(in_dim)
        weights = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        return cls(weights, np.zeros(out_dim), activation)


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """Forward through one dense layer; x is (..., in_dim)."""
    z = x @ layer.weights.T + layer.biases
    return np.tanh(z) if layer.activation == "tanh" else z


@dataclass
class VqcLayer:
    n_qubits: int = 5
    depth: int = 2
    angles: np.ndarray = None  # (depth, n_qubits, 3): Rx, Ry, Rz per qubit

    def __post_init__(self):
        if self.angles is None:
            self.angles = np.zeros((self.depth, self.n_qubits, 3))
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.angles.shape != (self.depth, self.n_qubits, 3):
            raise ValueError(
                f"angles shape {self.angles.shape} != {(self.depth, self.n_qubits, 3)}"
            )

    @classmethod
    def init(cls, rng, n_qubits: int = 5, depth: int = 2):
        angles = rng.uniform(-math.pi, math.pi, size=(depth, n_qubits, 3))
        return cls(n_qubits, depth, angles)


@dataclass
class HybridQNet:
    input_fc: DenseLayer  # state_dim -> hidden, tanh
    align_in: DenseLayer  # hidden -> n_qubits, tanh
    vqc: VqcLayer
    align_out: DenseLayer  # n_qubits -> hidden, identity
    output_fc: DenseLayer  # hidden -> n_actions, identity

    def __post_init__(self):
        chain = [
            (self.input_fc.out_dim, self.align_in.in_dim),
            (self.align_in.out_dim, self.vqc.n_qubits),
            (self.vqc.n_qubits, self.align_out.in_dim),
            (self.align_out.out_dim, self.output_fc.in_dim),
        ]
        for got, want in chain:
            if got != want:
                raise ValueError(f"inconsistent layer dimensions: {got} != {want}")

    @property
    def state_dim(self) -> int:
        return self.input_fc.in_dim

    @property
    def n_actions(self) -> int:
        return self.output_fc.out_dim

    @classmethod
    def init(cls, state_dim: int, n_actions: int, rng, hidden: int = 32, depth: int = 2):
        return cls(
            input_fc=DenseLayer.init(state_dim, hidden, rng, "tanh"),
            align_in=DenseLayer.init(hidden, 5, rng, "tanh"),
            vqc=VqcLayer.init(rng, n_qubits=5, depth=depth),
            align_out=DenseLayer.init(5, hidden, rng, "identity"),
            output_fc=DenseLayer.init(hidden, n_actions, rng, "identity"),
        )

    def parameters(self) -> dict[str, np.ndarray]:
        """Named views of every trainable tensor (mutating them updates the net)."""
        out = {}
        for name in ("input_fc", "align_in"):
            layer = getattr(self, name)
            out[f"{name}.weights"] = layer.weights
            out[f"{name}.biases"] = layer.biases
        out["vqc.angles"] = self.vqc.angles
        for name in ("align_out", "output_fc"):
            layer = getattr(self, name)
            out[f"{name}.weights"] = layer.weights
            out[f"{name}.biases"] = layer.biases
        return out


@dataclass
class MlpQNet:
    layers: list[DenseLayer]

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(f"inconsistent layer dimensions: {a.out_dim} != {b.in_dim}")

    @property
    def state_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def n_actions(self) -> int:
        return self.layers[-1].out_dim

    @classmethod
    def init(cls, state_dim: int, n_actions: int, rng, hidden: int = 32):
        return cls(
            [
                DenseLayer.init(state_dim, hidden, rng, "tanh"),
                DenseLayer.init(hidden, hidden, rng, "tanh"),
                DenseLayer.init(hidden, n_actions, rng, "identity"),
            ]
        )

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"layers.{i}.weights"] = layer.weights
            out[f"layers.{i}.biases"] = layer.biases
        return out


# ---------------------------------------------------------------------------
# State encoding and circuit evaluation
# ---------------------------------------------------------------------------


def encode_state(features, feature_min, feature_max) -> np.ndarray:
    """Map features affinely into [0, pi] radians, clamping at the bounds."""
    x = np.asarray(features, dtype=np.float64)
    lo = np.broadcast_to(np.asarray(feature_min, dtype=np.float64), x.shape)
    hi = np.broadcast_to(np.asarray(feature_max, dtype=np.float64), x.shape)
    if np.any(lo >= hi):
        bad = int(np.argmax(lo >= hi))
        raise ValueError(f"feature_min must be < feature_max (component {bad})")
    return np.clip(math.pi * (x - lo) / (hi - lo), 0.0, math.pi)


@lru_cache(maxsize=None)
def _circuit_ops(n_qubits: int, depth: int) -> tuple:
    """Static gate list: ('rx'|'ry'|'rz', qubit, angle_ref) and ('cnot', c, t).

    angle_ref is ('enc', qubit) for encoding rotations or ('var', block,
    qubit, component) for trainable ones.
    """
    ops = [("rx", q, ("enc", q)) for q in range(n_qubits)]
    for block in range(depth):
        for q in range(n_qubits):
            for comp, kind in enumerate(("rx", "ry", "rz")):
                ops.append((kind, q, ("var", block, q, comp)))
        for q in range(n_qubits - 1):
            ops.append(("cnot", q, q + 1))
    return tuple(ops)


_ROT_KERNEL = {"rx": qsim.batch_rx, "ry": qsim.batch_ry, "rz": qsim.batch_rz}
_PAULI = {"rx": qsim.batch_pauli_x, "ry": qsim.batch_pauli_y, "rz": qsim.batch_pauli_z}


def _vqc_raw(enc: np.ndarray, angles: np.ndarray, keep_states: bool = False):
    """Run the circuit for a stack of encodings.

    enc: (rows, n_qubits) radians; angles: (depth, n_qubits, 3) shared by all
    rows.  Returns (raw, final_amps, states) where raw[r, q] is the Pauli-Z
    expectation of qubit q in row r and states (when kept) holds the
    statevector stack after every gate, for the adjoint sweep.
    """
    depth, n_qubits, _ = angles.shape
    rows = enc.shape[0]
    amps = qsim.batch_zero_state(rows, n_qubits)
    states = [amps.copy()] if keep_states else None
    for op in _circuit_ops(n_qubits, depth):
        kind = op[0]
        if kind == "cnot":
            amps = qsim.batch_cnot(amps, op[1], op[2], n_qubits)
        else:
            ref = op[2]
            theta = enc[:, ref[1]] if ref[0] == "enc" else angles[ref[1], ref[2], ref[3]]
            _ROT_KERNEL[kind](amps, op[1], n_qubits, theta)
        if keep_states:
            states.append(amps.copy())
    raw = np.stack([qsim.batch_expect_z(amps, q, n_qubits) for q in range(n_qubits)], axis=1)
    return raw, amps, states


@lru_cache(maxsize=None)
def _sign_matrix(n_qubits: int) -> np.ndarray:
    return np.stack([qsim._z_signs(n_qubits, q) for q in range(n_qubits)])


def _vqc_vjp(enc: np.ndarray, angles: np.ndarray, w: np.ndarray):
    """Contract d<Z_q>/d(angle) with per-row weights w in one reverse sweep.

    Returns (d_enc, d_angles): d_enc[r, q] = sum_m w[r, m] * d raw[r, m]/d enc[r, q]
    and d_angles summed over rows.  Exact (same derivatives as the shift rule).
    """
    depth, n_qubits, _ = angles.shape
    _, psi, states = _vqc_raw(enc, angles, keep_states=True)
    d_enc = np.zeros_like(enc)
    d_angles = np.zeros_like(angles)
    # Effective observable per row: sum_m w[r, m] Z_m, diagonal in the basis.
    diag = w @ _sign_matrix(n_qubits)
    lam = diag * psi
    ops = _circuit_ops(n_qubits, depth)
    for k in range(len(ops) - 1, -1, -1):
        op = ops[k]
        kind = op[0]
        if kind == "cnot":
            lam = qsim.batch_cnot(lam, op[1], op[2], n_qubits)  # CNOT is self-inverse
            continue
        qubit, ref = op[1], op[2]
        p_phi = _PAULI[kind](states[k + 1], qubit, n_qubits)
        grad = np.einsum("rj,rj->r", np.conj(lam), p_phi).imag
        if ref[0] == "enc":
            d_enc[:, ref[1]] = grad
            theta = -enc[:, ref[1]]
        else:
            d_angles[ref[1], ref[2], ref[3]] = grad.sum()
            theta = -angles[ref[1], ref[2], ref[3]]
        _ROT_KERNEL[kind](lam, qubit, n_qubits, theta)
    return d_enc, d_angles


def _vqc_jacobians_shift(enc_row: np.ndarray, angles: np.ndarray):
    """Parameter-shift Jacobians of the raw expectations for one encoding row.

    Returns (j_enc, j_var): j_enc[m, q] = d raw[m] / d enc[q] and
    j_var[m, block, qubit, comp] likewise for the trainable angles.
    """
    depth, n_qubits, _ = angles.shape
    j_enc = np.zeros((n_qubits, n_qubits))
    j_var = np.zeros((n_qubits,) + angles.shape)

    def raw_at(enc_v, ang_v):
        return _vqc_raw(enc_v[None, :], ang_v)[0][0]

    for q in range(n_qubits):
        shifted = enc_row.copy()
        shifted[q] = enc_row[q] + math.pi / 2
        plus = raw_at(shifted, angles)
        shifted[q] = enc_row[q] - math.pi / 2
        minus = raw_at(shifted, angles)
        j_enc[:, q] = (plus - minus) / 2.0
    for idx in np.ndindex(angles.shape):
        shifted = angles.copy()
        shifted[idx] = angles[idx] + math.pi / 2
        plus = raw_at(enc_row, shifted)
        shifted[idx] = angles[idx] - math.pi / 2
        minus = raw_at(enc_row, shifted)
        j_var[(slice(None),) + idx] = (plus - minus) / 2.0
    return j_enc, j_var


def vqc_forward(encoded, vqc: VqcLayer) -> np.ndarray:
    """Circuit output for one encoding: Pauli-Z expectations rescaled to [0, 1]."""
    enc = np.asarray(encoded, dtype=np.float64).ravel()
    if enc.shape != (vqc.n_qubits,):
        raise ValueError(f"encoded state must have {vqc.n_qubits} components, got {enc.shape}")
    raw, _, _ = _vqc_raw(enc[None, :], vqc.angles)
    return (raw[0] + 1.0) / 2.0


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------

_HybridCache = namedtuple("_HybridCache", "x h1 t enc raw z h2 q states")


def _hybrid_forward_batch(net: HybridQNet, x: np.ndarray, keep_states: bool = False):
    h1 = dense_forward(net.input_fc, x)
    t = dense_forward(net.align_in, h1)
    enc = np.clip(math.pi * (t + 1.0) / 2.0, 0.0, math.pi)  # tanh range -> [0, pi]
    if _fastvqc.HAVE_JIT and not keep_states:
        raw = _fastvqc.vqc_raw_jit(enc, net.vqc.angles)
        states = None
    else:
        raw, _, states = _vqc_raw(enc, net.vqc.angles, keep_states=keep_states)
    z = (raw + 1.0) / 2.0
    h2 = dense_forward(net.align_out, z)
    q = dense_forward(net.output_fc, h2)
    return _HybridCache(x, h1, t, enc, raw, z, h2, q, states)


def _mlp_forward_batch(net: MlpQNet, x: np.ndarray):
    activations = [x]
    for layer in net.layers:
        activations.append(dense_forward(layer, activations[-1]))
    return activations


def forward(net, state_features) -> QValues:
    """One Q-value per action for a single state, either backend."""
    x = np.asarray(state_features, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != net.state_dim:
        raise ValueError(f"expected {net.state_dim} features, got {x.shape[1]}")
    if isinstance(net, HybridQNet):
        return _hybrid_forward_batch(net, x).q[0]
    return _mlp_forward_batch(net, x)[-1][0]


def hybrid_forward(state_features, net: HybridQNet) -> QValues:
    return forward(net, state_features)


def mlp_forward(state_features, net: MlpQNet) -> QValues:
    return forward(net, state_features)


def forward_batch(net, x: np.ndarray) -> np.ndarray:
    """(batch, n_actions) Q-values for a stack of states."""
    x = np.asarray(x, dtype=np.float64)
    if isinstance(net, HybridQNet):
        return _hybrid_forward_batch(net, x).q
    return _mlp_forward_batch(net, x)[-1]


# ---------------------------------------------------------------------------
# Temporal-difference arithmetic
# ---------------------------------------------------------------------------


def td_target(reward: float, gamma: float, next_q, done: bool = False) -> float:
    """Bootstrap target: reward plus discounted best next-state value."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    next_q = np.asarray(next_q, dtype=np.float64)
    if next_q.size == 0:
        raise ValueError("next_q must be non-empty")
    if done:
        return float(reward)
    return float(reward + gamma * next_q.max())


def q_update_tabular(q: float, alpha: float, target: float) -> float:
    """Reference one-step value update used as a test oracle for the nets."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    return q + alpha * (target - q)


TransitionBatch = namedtuple("TransitionBatch", "states actions rewards next_states dones")


def _as_batch(batch) -> TransitionBatch:
    if isinstance(batch, TransitionBatch):
        return batch
    items = list(batch)
    if not items:
        raise ValueError("batch must be non-empty")
    return TransitionBatch(
        states=np.asarray([t.state for t in items], dtype=np.float64),
        actions=np.asarray([t.action for t in items], dtype=np.int64),
        rewards=np.asarray([t.reward for t in items], dtype=np.float64),
        next_states=np.asarray([t.next_state for t in items], dtype=np.float64),
        dones=np.asarray([t.done for t in items], dtype=bool),
    )


def _batch_targets(batch: TransitionBatch, target_net, gamma: float) -> np.ndarray:
    next_q = forward_batch(target_net, batch.next_states)
    bootstrap = np.where(batch.dones, 0.0, next_q.max(axis=1))
    return batch.rewards + gamma * bootstrap


def batch_loss(batch, net, target_net, gamma: float) -> float:
    """Mean squared TD error; the target network side carries no gradient."""
    b = _as_batch(batch)
    if b.states.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    targets = _batch_targets(b, target_net, gamma)
    q = forward_batch(net, b.states)
    chosen = q[np.arange(len(b.actions)), b.actions]
    return float(np.mean((targets - chosen) ** 2))


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------


def gradients(batch, net, target_net, gamma: float, method: str = "adjoint") -> dict:
    """Exact gradient of ``batch_loss`` with respect to every parameter.

    ``method`` selects how circuit-angle derivatives are obtained for the
    hybrid backend ("adjoint" or "shift"); it is ignored for the MLP.
    """
    if method not in ("adjoint", "shift"):
        raise ValueError(f"unknown gradient method {method!r}")
    b = _as_batch(batch)
    targets = _batch_targets(b, target_net, gamma)
    if isinstance(net, MlpQNet):
        return _mlp_gradients(b, net, targets)
    return _hybrid_gradients(b, net, targets, method)


def _output_grad(q: np.ndarray, actions: np.ndarray, targets: np.ndarray) -> np.ndarray:
    batch_size, n_actions = q.shape
    chosen = q[np.arange(batch_size), actions]
    g = np.zeros((batch_size, n_actions))
    g[np.arange(batch_size), actions] = 2.0 * (chosen - targets) / batch_size
    return g


def _mlp_gradients(b: TransitionBatch, net: MlpQNet, targets: np.ndarray) -> dict:
    activations = _mlp_forward_batch(net, b.states)
    grads = {}
    upstream = _output_grad(activations[-1], b.actions, targets)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        dz = upstream * (1.0 - activations[i + 1] ** 2) if layer.activation == "tanh" else upstream
        grads[f"layers.{i}.weights"] = dz.T @ activations[i]
        grads[f"layers.{i}.biases"] = dz.sum(axis=0)
        if i > 0:
            upstream = dz @ layer.weights
    if not np.all(np.isfinite(np.concatenate([g.ravel() for g in grads.values()]))):
        raise FloatingPointError("non-finite gradient")
    return grads


def _hybrid_gradients(b: TransitionBatch, net: HybridQNet, targets: np.ndarray, method: str) -> dict:
    keep_states = method == "adjoint" and not _fastvqc.HAVE_JIT
    cache = _hybrid_forward_batch(net, b.states, keep_states=keep_states)
    grads = {}
    g_q = _output_grad(cache.q, b.actions, targets)

    grads["output_fc.weights"] = g_q.T @ cache.h2
    grads["output_fc.biases"] = g_q.sum(axis=0)
    g_h2 = g_q @ net.output_fc.weights

    grads["align_out.weights"] = g_h2.T @ cache.z
    grads["align_out.biases"] = g_h2.sum(axis=0)
    g_z = g_h2 @ net.align_out.weights

    w_raw = g_z * 0.5  # z = (raw + 1) / 2
    if method == "adjoint" and _fastvqc.HAVE_JIT:
        g_enc, g_angles, _ = _fastvqc.vqc_vjp_jit(cache.enc, net.vqc.angles, w_raw)
    elif method == "adjoint":
        g_enc, g_angles = _vqc_vjp_from_cache(cache, net.vqc.angles, w_raw)
    else:
        batch_size = b.states.shape[0]
        g_enc = np.zeros_like(cache.enc)
        g_angles = np.zeros_like(net.vqc.angles)
        for r in range(batch_size):
            j_enc, j_var = _vqc_jacobians_shift(cache.enc[r], net.vqc.angles)
            g_enc[r] = w_raw[r] @ j_enc
            g_angles += np.einsum("m,m...->...", w_raw[r], j_var)
    grads["vqc.angles"] = g_angles

    g_t = g_enc * (math.pi / 2.0)  # enc = pi * (t + 1) / 2
    g_z2 = g_t * (1.0 - cache.t**2)
    grads["align_in.weights"] = g_z2.T @ cache.h1
    grads["align_in.biases"] = g_z2.sum(axis=0)
    g_h1 = g_z2 @ net.align_in.weights

    g_z1 = g_h1 * (1.0 - cache.h1**2)
    grads["input_fc.weights"] = g_z1.T @ cache.x
    grads["input_fc.biases"] = g_z1.sum(axis=0)

    ordered = {name: grads[name] for name in net.parameters()}
    if not np.all(np.isfinite(np.concatenate([g.ravel() for g in ordered.values()]))):
        raise FloatingPointError("non-finite gradient")
    return ordered


def _vqc_vjp_from_cache(cache: _HybridCache, angles: np.ndarray, w: np.ndarray):
    """Adjoint sweep reusing the forward statevector stack held in the cache."""
    depth, n_qubits, _ = angles.shape
    states = cache.states
    d_enc = np.zeros_like(cache.enc)
    d_angles = np.zeros_like(angles)
    diag = w @ _sign_matrix(n_qubits)
    lam = diag * states[-1]
    ops = _circuit_ops(n_qubits, depth)
    for k in range(len(ops) - 1, -1, -1):
        op = ops[k]
        kind = op[0]
        if kind == "cnot":
            lam = qsim.batch_cnot(lam, op[1], op[2], n_qubits)
            continue
        qubit, ref = op[1], op[2]
        p_phi = _PAULI[kind](states[k + 1], qubit, n_qubits)
        grad = np.einsum("rj,rj->r", np.conj(lam), p_phi).imag
        if ref[0] == "enc":
            d_enc[:, ref[1]] = grad
            theta = -cache.enc[:, ref[1]]
        else:
            d_angles[ref[1], ref[2], ref[3]] = grad.sum()
            theta = -angles[ref[1], ref[2], ref[3]]
        _ROT_KERNEL[kind](lam, qubit, n_qubits, theta)
    return d_enc, d_angles


# ---------------------------------------------------------------------------
# Optimizer and target-network bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict, learning_rate: float = 1e-3, **kwargs):
        state = cls(learning_rate=learning_rate, **kwargs)
        state.first_moment = {k: np.zeros_like(v) for k, v in params.items()}
        state.second_moment = {k: np.zeros_like(v) for k, v in params.items()}
        return state


def adam_step(params: dict, grads: dict, opt: AdamState) -> None:
    """One bias-corrected Adam update, moving parameters down the gradient."""
    if set(params) != set(grads):
        raise ValueError("parameter and gradient keys differ")
    opt.step_count += 1
    bc1 = 1.0 - opt.beta1**opt.step_count
    bc2 = 1.0 - opt.beta2**opt.step_count
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {key}")
        m = opt.first_moment[key]
        v = opt.second_moment[key]
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        p -= opt.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + opt.epsilon)


def sync_target(net):
    """Frozen deep copy of a network, used as the bootstrap target."""
    return copy.deepcopy(net)


# ---------------------------------------------------------------------------
# Checkpoints: ordered named tensors, lossless at 64-bit precision
# ---------------------------------------------------------------------------


def params_to_manifest(net) -> dict:
    tensors = [
        {"name": name, "shape": list(array.shape), "data": array.ravel().tolist()}
        for name, array in net.parameters().items()
    ]
    return {"format": "qbidsim-params-v1", "tensors": tensors}


def save_params(net, path) -> None:
    Path(path).write_text(json.dumps(params_to_manifest(net)) + "\n")


def load_params(net, path) -> None:
    """Load a checkpoint into an existing net of matching architecture."""
    manifest = json.loads(Path(path).read_text())
    if manifest.get("format") != "qbidsim-params-v1":
        raise ValueError(f"unrecognized checkpoint format {manifest.get('format')!r}")
    params = net.parameters()
    stored = {t["name"]: t for t in manifest["tensors"]}
    if set(stored) != set(params):
        raise ValueError("checkpoint tensors do not match network parameters")
    for name, array in params.items():
        entry = stored[name]
        data = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if data.shape != array.shape:
            raise ValueError(f"shape mismatch for {name}: {data.shape} != {array.shape}")
        np.copyto(array, data)
