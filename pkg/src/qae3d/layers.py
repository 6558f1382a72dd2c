"""Differentiable stages chained into encoder/bottleneck/decoder pipelines.

Each layer maps a 1-D array to a 1-D array. ``backward`` receives the loss
gradient w.r.t. its output in the complex convention ``dL/dRe + i dL/dIm``
(plain real gradients for real-valued layers) and returns the gradient
w.r.t. its input and w.r.t. its own parameters.
"""
from __future__ import annotations

import numpy as np

from . import sim
from .errors import DegenerateError, NumericalError

# Floor applied to probabilities inside the sqrt derivative of re-embedding.
SQRT_GRAD_FLOOR = 1e-12


def elu(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def _safe_phase(x):
    mod = np.abs(x)
    out = np.zeros_like(x)
    nz = mod > 0
    out[nz] = x[nz] / mod[nz]
    return out


class Layer:
    n_params = 0

    def forward(self, params, x):
        raise NotImplementedError

    def backward(self, params, cache, grad_y):
        raise NotImplementedError

    def init_params(self, rng):
        return np.zeros(self.n_params)


class CircuitLayer(Layer):
    """Parametrised quantum circuit acting on a state vector."""

    def __init__(self, circuit, initial_params=None):
        self.circuit = circuit
        self.n_params = circuit.param_count
        self.initial_params = initial_params

    def init_params(self, rng):
        return np.array(self.initial_params, dtype=float)

    def forward(self, params, x):
        return sim.circuit_forward(x, self.circuit, params)

    def backward(self, params, cache, grad_y):
        return sim.circuit_backward(self.circuit, params, cache, grad_y)


class DenseLayer(Layer):
    """Bias-free ``y = W x``, optionally rescaled to unit L2 norm."""

    def __init__(self, n_in, n_out, normalize_output=False):
        self.n_in = n_in
        self.n_out = n_out
        self.normalize_output = normalize_output
        self.n_params = n_in * n_out

    def init_params(self, rng):
        bound = 1.0 / np.sqrt(self.n_in)
        return rng.uniform(-bound, bound, size=self.n_params)

    def forward(self, params, x):
        x = np.real(x)
        w = params.reshape(self.n_out, self.n_in)
        z = w @ x
        if not self.normalize_output:
            return z, (x, None, None)
        norm = np.linalg.norm(z)
        if norm == 0:
            raise DegenerateError("dense layer output is all zero; cannot normalise")
        y = z / norm
        return y, (x, y, norm)

    def backward(self, params, cache, grad_y):
        x, y, norm = cache
        g = np.real(grad_y)
        if self.normalize_output:
            g = (g - y * (y @ g)) / norm
        w = params.reshape(self.n_out, self.n_in)
        return w.T @ g, np.outer(g, x).ravel()


class Marginalise(Layer):
    """Trace out the last ``n_discard`` qubits and re-embed sqrt(probs) with B reset to |0>."""

    def __init__(self, n_discard):
        self.n_discard = n_discard

    def forward(self, params, x):
        probs = sim.marginal_probabilities(x, self.n_discard)
        return sim.reembed(probs, self.n_discard), (x, probs)

    def backward(self, params, cache, grad_y):
        x, probs = cache
        stride = 2**self.n_discard
        g_amp = np.real(grad_y[::stride])
        g_p = g_amp / (2.0 * np.sqrt(np.maximum(probs, SQRT_GRAD_FLOOR)))
        grad_x = 2.0 * (g_p[:, None] * x.reshape(-1, stride)).ravel()
        return grad_x, np.zeros(0)


class SubvectorElu(Layer):
    """Keep the B=|0> slice, apply ELU to its moduli and renormalise."""

    def __init__(self, n_discard):
        self.n_discard = n_discard

    def forward(self, params, x):
        stride = 2**self.n_discard
        sub = np.asarray(x)[::stride]
        mod = np.abs(sub)
        e = elu(mod)
        norm = np.linalg.norm(e)
        if norm == 0:
            raise DegenerateError("ELU bottleneck received an all-zero sub-vector")
        r = e / norm
        y = np.zeros(x.shape[0], dtype=complex)
        y[::stride] = r
        return y, (sub, mod, r, norm)

    def backward(self, params, cache, grad_y):
        sub, mod, r, norm = cache
        stride = 2**self.n_discard
        g_r = np.real(grad_y[::stride])
        g_e = (g_r - r * (r @ g_r)) / norm
        g_mod = g_e * elu_grad(mod)
        grad_x = np.zeros(grad_y.shape[0], dtype=complex)
        grad_x[::stride] = g_mod * _safe_phase(sub)
        return grad_x, np.zeros(0)


class Elu(Layer):
    def forward(self, params, x):
        x = np.real(x)
        return elu(x), x

    def backward(self, params, cache, grad_y):
        return np.real(grad_y) * elu_grad(cache), np.zeros(0)


class Readout(Layer):
    """Elementwise modulus: the exact measurement amplitudes."""

    def forward(self, params, x):
        return sim.readout(x), x

    def backward(self, params, cache, grad_y):
        return np.real(grad_y) * _safe_phase(np.asarray(cache, dtype=complex)), np.zeros(0)


class Network:
    """A chain of layers sharing one flat parameter vector."""

    def __init__(self, layers):
        self.layers = list(layers)
        self.offsets = np.cumsum([0] + [layer.n_params for layer in self.layers])

    @property
    def n_params(self) -> int:
        return int(self.offsets[-1])

    def split(self, params):
        return [params[self.offsets[i] : self.offsets[i + 1]] for i in range(len(self.layers))]

    def init_params(self, rng):
        if not self.layers:
            return np.zeros(0)
        return np.concatenate([layer.init_params(rng) for layer in self.layers])

    def forward(self, params, x, stop=None):
        """Run layers ``[0, stop)``; returns the output and per-layer caches."""
        caches = []
        for layer, p in list(zip(self.layers, self.split(params)))[:stop]:
            x, cache = layer.forward(p, x)
            caches.append(cache)
        return x, caches

    def run(self, params, x, start=0):
        for layer, p in list(zip(self.layers, self.split(params)))[start:]:
            x, _ = layer.forward(p, x)
        return x

    def backward(self, params, caches, grad_y):
        grads = []
        for layer, p, cache in reversed(list(zip(self.layers, self.split(params), caches))):
            grad_y, g = layer.backward(p, cache, grad_y)
            grads.append(g)
        return np.concatenate(grads[::-1]) if grads else np.zeros(0), grad_y


def loss_gradient(network, params, x, loss_fn):
    """Loss value and reverse-mode gradient w.r.t. the network parameters.

    ``loss_fn(y)`` returns ``(L, dL/dy)`` for the network output ``y``.
    """
    params = np.asarray(params, dtype=float)
    y, caches = network.forward(params, x)
    value, grad_y = loss_fn(y)
    grad, _ = network.backward(params, caches, grad_y)
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite gradient")
    return value, grad
