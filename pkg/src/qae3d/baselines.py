"""Functional forward passes of the classical and hybrid baselines.

The trainable versions live in :mod:`qae3d.estimators`; these helpers take
explicit weight matrices and are handy for checks and notebooks.
"""
from __future__ import annotations

import numpy as np

from . import layers as L
from .encoding import encode_point_cloud

HYBRID_KINDS = ("qe-cd", "ce-qd")


def dense_forward(weights, x, normalize_output=False):
    weights = np.asarray(weights, dtype=float)
    layer = L.DenseLayer(weights.shape[1], weights.shape[0], normalize_output)
    if np.asarray(x).shape != (weights.shape[1],):
        raise ValueError(f"input of length {np.asarray(x).shape} does not match {weights.shape}")
    return layer.forward(weights.ravel(), np.asarray(x, dtype=float))[0]


def elu(x):
    return L.elu(x)


def _amplitude_pipeline(encoder, decoder, pc, n_qubits, n_discard):
    net = L.Network([encoder, L.Marginalise(n_discard), decoder, L.Readout()])
    params = np.concatenate([p for p in (encoder.params, decoder.params)])
    return net.run(params, encode_point_cloud(pc, n_qubits))


class _Fixed:
    """Wrap a layer with frozen parameters for the functional helpers."""

    def __init__(self, layer, params):
        self.layer = layer
        self.params = np.asarray(params, dtype=float).ravel()
        self.n_params = layer.n_params

    def forward(self, params, x):
        return self.layer.forward(params, x)


def _dense(weights):
    weights = np.asarray(weights, dtype=float)
    if weights.shape[0] != weights.shape[1]:
        raise ValueError("mimic layers must be square")
    return _Fixed(L.DenseLayer(weights.shape[1], weights.shape[0], normalize_output=True), weights)


def _circuit(circuit, params):
    return _Fixed(L.CircuitLayer(circuit, params), params)


def mimic_forward(enc_weights, dec_weights, pc, n_discard=2):
    """Quantum pipeline with each circuit replaced by one normalised square dense layer."""
    n_qubits = int(np.log2(np.asarray(enc_weights).shape[0]))
    return _amplitude_pipeline(_dense(enc_weights), _dense(dec_weights), pc, n_qubits, n_discard)


def hybrid_forward(kind, pc, *, circuit, circuit_params, weights, n_discard=2):
    """QE-CD (quantum encoder, dense decoder) or CE-QD (dense encoder, quantum decoder)."""
    if kind not in HYBRID_KINDS:
        raise ValueError(f"kind must be one of {HYBRID_KINDS}")
    q = _circuit(circuit, circuit_params)
    d = _dense(weights)
    enc, dec = (q, d) if kind == "qe-cd" else (d, q)
    return _amplitude_pipeline(enc, dec, pc, circuit.n_qubits, n_discard)


def fc_forward(enc_weights, dec_weights, pc):
    """Predicted normalised vertices ``dec @ elu(enc @ x)`` from the flat 3V coordinates."""
    x = np.asarray(pc, dtype=float).ravel()
    enc_weights = np.asarray(enc_weights, dtype=float)
    dec_weights = np.asarray(dec_weights, dtype=float)
    if enc_weights.shape[1] != x.shape[0] or dec_weights.shape != enc_weights.shape[::-1]:
        raise ValueError("fully connected weight shapes do not match the input")
    return (dec_weights @ L.elu(enc_weights @ x)).reshape(-1, 3)
