"""Invariant batteries run by ``qae3d selfcheck``."""
from __future__ import annotations

import itertools

import numpy as np

from . import layers as L
from . import sim
from .circuits import build_circuit, default_partition
from .encoding import decode_to_points, encode_point_cloud
from .training import reconstruction_loss, reconstruction_loss_and_grad

KINDS = ("A", "B", "C", "D")
ARCHS = ("repeat", "inverse")
INITS = ("random", "identity")


def random_state(n_qubits, rng):
    psi = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return psi / np.linalg.norm(psi)


def dense_partial_trace_diag(state, n_discard):
    """Diagonal of sum_i (I_A x <i|) |phi><phi| (I_A x |i>) built from explicit matrices."""
    n = int(np.log2(state.shape[0]))
    dim_a, dim_b = 2 ** (n - n_discard), 2**n_discard
    rho_full = np.outer(state, state.conj())
    rho = np.zeros((dim_a, dim_a), dtype=complex)
    for i in range(dim_b):
        ket = np.zeros((dim_b, 1))
        ket[i] = 1.0
        proj = np.kron(np.eye(dim_a), ket)  # 2^N x 2^N_A
        rho += proj.T @ rho_full @ proj
    return np.real(np.diag(rho))


def central_difference(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(x.shape[0]):
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        g[k] = (f(xp) - f(xm)) / (2 * h)
    return g


def check_unitarity(rng, n_qubits=6, n_discard=2, draws=3):
    kept, disc = default_partition(n_qubits, n_discard)
    worst = 0.0
    for kind, arch, init in itertools.product(KINDS, ARCHS, INITS):
        circuit, _ = build_circuit(1, kind, arch, init, n_qubits, kept, disc)
        for _ in range(draws):
            u = sim.circuit_unitary(circuit, rng.uniform(-np.pi, np.pi, circuit.param_count))
            worst = max(worst, np.abs(u.conj().T @ u - np.eye(2**n_qubits)).max())
    return worst <= 1e-10, worst


def check_inverse_law(rng, n_qubits=4, trials=5):
    kept, disc = default_partition(n_qubits, 1)
    worst = 0.0
    for kind in KINDS:
        circuit, _ = build_circuit(2, kind, "repeat", "random", n_qubits, kept, disc)
        for _ in range(trials):
            params = rng.uniform(-np.pi, np.pi, circuit.param_count)
            inv, inv_params = circuit.inverse(params)
            psi = random_state(n_qubits, rng)
            back = sim.apply_circuit(sim.apply_circuit(psi, circuit, params), inv, inv_params)
            worst = max(worst, np.linalg.norm(back - psi))
    return worst <= 1e-10, worst


def check_marginalisation(rng, trials=10):
    worst = 0.0
    for n in range(3, 7):
        for nb in (1, 2):
            for _ in range(trials):
                psi = random_state(n, rng)
                worst = max(worst, np.abs(sim.marginal_probabilities(psi, nb) - dense_partial_trace_diag(psi, nb)).max())
    return worst <= 1e-12, worst


def check_gradient(rng, trials=2, n_qubits=6, n_discard=2, n_blocks=1):
    kept, disc = default_partition(n_qubits, n_discard)
    worst = 0.0
    for _ in range(trials):
        enc, p_enc = build_circuit(n_blocks, "B", "repeat", "random", n_qubits, kept, disc, rng=rng)
        dec, p_dec = build_circuit(n_blocks, "B", "repeat", "random", n_qubits, kept, disc, rng=rng)
        net = L.Network([L.CircuitLayer(enc), L.Marginalise(n_discard), L.CircuitLayer(dec), L.Readout()])
        params = np.concatenate([p_enc, p_dec])
        pc = rng.uniform(0, 1, size=(16, 3))
        psi = encode_point_cloud(pc, n_qubits)
        _, grad = L.loss_gradient(net, params, psi, lambda a: reconstruction_loss_and_grad(a, pc))
        fd = central_difference(lambda p: reconstruction_loss(net.run(p, psi), pc), params)
        # ratio <= 1 means within rtol 1e-4 / atol 1e-8
        ratio = np.abs(grad - fd) / (1e-8 + 1e-4 * np.abs(fd))
        worst = max(worst, float(ratio.max()))
    return worst <= 1.0, worst


def check_loss_zero(rng, trials=20):
    worst = 0.0
    for _ in range(trials):
        v = int(rng.integers(1, 17))
        pc = rng.uniform(0, 1, size=(v, 3))
        n = int(np.ceil(np.log2(4 * v))) or 1
        worst = max(worst, reconstruction_loss(encode_point_cloud(pc, n), pc))
    return worst <= 1e-12, worst


def check_roundtrip(rng, trials=100):
    worst = 0.0
    for _ in range(trials):
        pc = rng.uniform(0, 1, size=(16, 3))
        amps = encode_point_cloud(pc, 6)
        worst = max(worst, np.abs(decode_to_points(amps, 16) - pc).max(), abs(np.linalg.norm(amps) - 1))
    return worst <= 1e-12, worst


CHECKS = {
    "unitarity": check_unitarity,
    "inverse_law": check_inverse_law,
    "marginalisation_oracle": check_marginalisation,
    "gradient_vs_finite_difference": check_gradient,
    "loss_zero": check_loss_zero,
    "encode_decode_roundtrip": check_roundtrip,
}


def run_all(seed=0):
    """List of (name, passed, worst-case deviation); each check gets its own seeded stream."""
    results = []
    for k, (name, fn) in enumerate(CHECKS.items()):
        ok, worst = fn(np.random.default_rng([seed, k]))
        results.append((name, bool(ok), float(worst)))
    return results
