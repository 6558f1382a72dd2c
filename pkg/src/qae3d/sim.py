"""Dense state-vector simulation with adjoint gradients.

States are 1-D ``complex128`` arrays of length ``2**n``. Basis index ``i``
stores qubit ``k`` at bit position ``n - 1 - k``, so qubit 0 is the most
significant bit and the last ``n_discard`` qubits form a contiguous low-order
block.
"""
from __future__ import annotations

import contextlib
from functools import lru_cache
from typing import Sequence

import numpy as np

UNCONTROLLED = ("RX", "RY", "RZ")
CONTROLLED = ("CRX", "CRY", "CRZ")
GATE_KINDS = UNCONTROLLED + CONTROLLED

MAX_UNITARY_QUBITS = 10

_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Test hook: when set, every rotation is followed by a Pauli-Z. Gates stay
# unitary but R(-t) no longer inverts R(t).
_fault = {"flip_sign": False}


@contextlib.contextmanager
def inject_fault():
    """Temporarily corrupt every rotation gate (used by ``selfcheck``)."""
    _fault["flip_sign"] = True
    try:
        yield
    finally:
        _fault["flip_sign"] = False


def _axis(kind: str) -> str:
    return kind[-1]


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    """2x2 rotation ``exp(-i angle P / 2)`` for the axis of ``kind``."""
    if kind not in GATE_KINDS:
        raise ValueError(f"unknown gate kind {kind!r}")
    c = np.cos(angle / 2)
    s = np.sin(angle / 2)
    axis = _axis(kind)
    if axis == "X":
        m = np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    elif axis == "Y":
        m = np.array([[c, -s], [s, c]], dtype=complex)
    else:
        m = np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex)
    if _fault["flip_sign"]:
        m = m @ _PAULI["Z"]
    return m


def rotation_derivative(kind: str, angle: float) -> np.ndarray:
    """d/d(angle) of :func:`rotation_matrix`, i.e. ``-i/2 P R(angle)``."""
    return -0.5j * _PAULI[_axis(kind)] @ rotation_matrix(kind, angle)


def gate_matrix(kind: str, angle: float) -> np.ndarray:
    """Full matrix of a gate: 2x2 for rotations, 4x4 (control first) for controlled ones."""
    r = rotation_matrix(kind, angle)
    if kind in UNCONTROLLED:
        return r
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = r
    return m


@lru_cache(maxsize=None)
def _pairs(n_qubits: int, target: int, control: int | None) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (i0, i1) differing only in the target bit, control bit set."""
    idx = np.arange(2**n_qubits)
    tbit = 1 << (n_qubits - 1 - target)
    mask = (idx & tbit) == 0
    if control is not None:
        mask &= (idx & (1 << (n_qubits - 1 - control))) != 0
    i0 = idx[mask]
    i0.flags.writeable = False
    i1 = i0 | tbit
    i1.flags.writeable = False
    return i0, i1


def n_qubits_of(state: np.ndarray) -> int:
    n = int(state.shape[0]).bit_length() - 1
    if n < 1 or state.shape[0] != 2**n:
        raise ValueError(f"state length {state.shape[0]} is not a power of two >= 2")
    return n


def _check_gate(gate, n_qubits: int) -> None:
    if not 0 <= gate.target < n_qubits:
        raise IndexError(f"target qubit {gate.target} out of range for {n_qubits} qubits")
    if gate.control is not None:
        if not 0 <= gate.control < n_qubits:
            raise IndexError(f"control qubit {gate.control} out of range for {n_qubits} qubits")
        if gate.control == gate.target:
            raise ValueError("control and target must differ")


def _apply_2x2(state: np.ndarray, m: np.ndarray, i0: np.ndarray, i1: np.ndarray) -> np.ndarray:
    out = state.copy()
    a0 = state[i0]
    a1 = state[i1]
    out[i0] = m[0, 0] * a0 + m[0, 1] * a1
    out[i1] = m[1, 0] * a0 + m[1, 1] * a1
    return out


def apply_gate(state: np.ndarray, gate, angle: float) -> np.ndarray:
    """Return ``gate(angle)`` applied to ``state``; the input is not modified."""
    state = np.asarray(state, dtype=complex)
    n = n_qubits_of(state)
    _check_gate(gate, n)
    i0, i1 = _pairs(n, gate.target, gate.control)
    return _apply_2x2(state, rotation_matrix(gate.kind, angle), i0, i1)


def _check_params(circuit, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.param_count,):
        raise ValueError(
            f"expected {circuit.param_count} parameters, got {params.shape[0] if params.ndim else 0}"
        )
    return params


def apply_circuit(state: np.ndarray, circuit, params: Sequence[float]) -> np.ndarray:
    """Apply the gates of ``circuit`` in list order."""
    params = _check_params(circuit, params)
    state = np.array(state, dtype=complex)
    n = n_qubits_of(state)
    if n != circuit.n_qubits:
        raise ValueError(f"circuit acts on {circuit.n_qubits} qubits, state has {n}")
    for gate in circuit.gates:
        i0, i1 = _pairs(n, gate.target, gate.control)
        state = _apply_2x2(state, rotation_matrix(gate.kind, params[gate.param_index]), i0, i1)
    return state


def circuit_forward(state: np.ndarray, circuit, params: np.ndarray) -> tuple[np.ndarray, list]:
    """Like :func:`apply_circuit` but also returns the tape of pre-gate states."""
    params = _check_params(circuit, params)
    state = np.asarray(state, dtype=complex)
    n = circuit.n_qubits
    tape = []
    for gate in circuit.gates:
        tape.append(state)
        i0, i1 = _pairs(n, gate.target, gate.control)
        state = _apply_2x2(state, rotation_matrix(gate.kind, params[gate.param_index]), i0, i1)
    return state, tape


def circuit_backward(circuit, params: np.ndarray, tape: list, grad_out: np.ndarray):
    """Reverse sweep through a taped circuit.

    ``grad_out`` holds dL/dRe + i dL/dIm of the output amplitudes. Returns the
    same quantity for the input state and dL/dparams.
    """
    n = circuit.n_qubits
    grad = np.asarray(grad_out, dtype=complex)
    grad_params = np.zeros(circuit.param_count)
    for gate, psi in zip(reversed(circuit.gates), reversed(tape)):
        angle = params[gate.param_index]
        i0, i1 = _pairs(n, gate.target, gate.control)
        m = rotation_matrix(gate.kind, angle)
        d = rotation_derivative(gate.kind, angle)
        a0 = psi[i0]
        a1 = psi[i1]
        g0 = grad[i0]
        g1 = grad[i1]
        grad_params[gate.param_index] += np.real(
            np.vdot(g0, d[0, 0] * a0 + d[0, 1] * a1) + np.vdot(g1, d[1, 0] * a0 + d[1, 1] * a1)
        )
        mh = m.conj().T
        grad = _apply_2x2(grad, mh, i0, i1)
    return grad, grad_params


def circuit_unitary(circuit, params: Sequence[float], n_qubits: int | None = None) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of a circuit; column j is the image of |j>."""
    n = circuit.n_qubits if n_qubits is None else n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise ValueError(f"refusing to build a dense unitary on {n} > {MAX_UNITARY_QUBITS} qubits")
    if n != circuit.n_qubits:
        raise ValueError(f"circuit acts on {circuit.n_qubits} qubits, not {n}")
    dim = 2**n
    u = np.empty((dim, dim), dtype=complex)
    for j in range(dim):
        basis = np.zeros(dim, dtype=complex)
        basis[j] = 1.0
        u[:, j] = apply_circuit(basis, circuit, params)
    return u


def marginal_probabilities(state: np.ndarray, n_discard: int) -> np.ndarray:
    """Diagonal of the reduced density matrix after tracing out the last ``n_discard`` qubits."""
    state = np.asarray(state)
    n = n_qubits_of(state)
    if not 0 < n_discard < n:
        raise ValueError(f"n_discard must lie in (0, {n}), got {n_discard}")
    return (np.abs(state.reshape(2 ** (n - n_discard), 2**n_discard)) ** 2).sum(axis=1)


def reembed(probs: np.ndarray, n_discard: int) -> np.ndarray:
    """Amplitude-encode ``probs`` on the kept qubits with the discarded ones reset to |0>."""
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(probs.sum() - 1.0) > 1e-8:
        raise ValueError(f"probabilities sum to {probs.sum()!r}, expected 1")
    out = np.zeros(probs.shape[0] * 2**n_discard, dtype=complex)
    out[:: 2**n_discard] = np.sqrt(probs)
    return out


def readout(state: np.ndarray) -> np.ndarray:
    """Exact probability amplitudes ``|xi_i|`` of every basis state."""
    return np.abs(np.asarray(state))


def zero_state(n_qubits: int) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi
