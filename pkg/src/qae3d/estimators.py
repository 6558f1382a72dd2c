"""scikit-learn style auto-encoders for registered point clouds.

All estimators take point clouds in metres as an (n_frames, V, 3) array (or
flat (n_frames, 3V), or a :class:`~qae3d.data.MotionDataset`). ``predict``
returns reconstructions in metres and ``score`` the negated mean Euclidean
distance in centimetres.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import layers as L
from .circuits import build_circuit, closest_multiple, default_partition
from .data import NormalizationParams, clamp_unit, compute_normalization, normalize, denormalize
from .encoding import decode_to_points, encode_point_cloud, mean_euclidean_distance, qubits_for
from .training import OptimConfig, run_optimiser, reconstruction_loss_and_grad, vertex_loss_and_grad
from .validation import check_point_clouds, check_qubit_layout

PART_KINDS = ("quantum", "dense")
BOTTLENECKS = ("marginalise", "elu")

# Named RNG substreams derived from one seed.
STREAM_INIT = 1
STREAM_SHUFFLE = 2


def substream(seed, stream):
    return np.random.default_rng([int(seed), stream])


class _OptimiserParamsMixin:
    def _optim_config(self):
        return OptimConfig(
            learning_rate=self.learning_rate, beta1=self.beta1, beta2=self.beta2, eps=self.adam_eps,
            lr_factor=self.lr_factor, lr_patience=self.lr_patience, lr_threshold=self.lr_threshold,
            min_lr=self.min_lr, ema_decay=self.ema_decay,
        )

    def _prepare(self, X):
        frames = check_point_clouds(X)
        self.n_vertices_ = frames.shape[1]
        norm = self.normalization
        if norm is not None and not isinstance(norm, NormalizationParams):
            norm = NormalizationParams.from_dict(norm)
        self.norm_ = compute_normalization(frames) if norm is None else norm
        return frames

    def _normalised(self, X):
        frames = check_point_clouds(X, self.n_vertices_)
        return clamp_unit(normalize(frames, self.norm_))

    def _train(self, network, params, value_and_grad, n_samples, callback):
        def hook(step, p):
            self.params_ = p
            if callback is not None:
                callback(step, self)

        self.params_ = params
        if callback is not None:
            callback(0, self)
        self.params_, self.log_ = run_optimiser(
            value_and_grad, params, n_samples, epochs=self.epochs, max_steps=self.max_steps,
            rng=substream(self.random_state, STREAM_SHUFFLE), config=self._optim_config(),
            callback=hook,
        )
        return self

    def score(self, X, y=None):
        return -mean_euclidean_distance(self.predict(X), check_point_clouds(X))


class QuantumAutoencoder(_OptimiserParamsMixin, TransformerMixin, BaseEstimator):
    """Amplitude-encoded auto-encoder with a partial-trace bottleneck.

    ``encoder`` / ``decoder`` choose between a parametrised circuit
    ("quantum") and a norm-normalised square dense layer ("dense"); both
    dense gives the classical mimic baseline, one of each the QE-CD / CE-QD
    hybrids. ``bottleneck="elu"`` swaps marginalisation for the ELU
    sub-vector variant.

    ``transform`` returns the latent probability vector of length
    ``2**(n_qubits - n_discard)``; ``inverse_transform`` decodes it back to
    points in metres.
    """

    def __init__(self, *, encoder="quantum", decoder="quantum", n_blocks=8, block="B",
                 architecture="repeat", init="identity", n_discard=2, n_qubits=None,
                 bottleneck="marginalise", epochs=1, max_steps=None, learning_rate=1e-2,
                 beta1=0.9, beta2=0.99, adam_eps=1e-8, lr_factor=0.5, lr_patience=200,
                 lr_threshold=1e-4, min_lr=1e-5, ema_decay=0.99, normalization=None,
                 random_state=0):
        self.encoder = encoder
        self.decoder = decoder
        self.n_blocks = n_blocks
        self.block = block
        self.architecture = architecture
        self.init = init
        self.n_discard = n_discard
        self.n_qubits = n_qubits
        self.bottleneck = bottleneck
        self.epochs = epochs
        self.max_steps = max_steps
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.lr_factor = lr_factor
        self.lr_patience = lr_patience
        self.lr_threshold = lr_threshold
        self.min_lr = min_lr
        self.ema_decay = ema_decay
        self.normalization = normalization
        self.random_state = random_state

    @property
    def model_kind(self) -> str:
        return {
            ("quantum", "quantum"): "quantum",
            ("dense", "dense"): "mimic",
            ("quantum", "dense"): "qe-cd",
            ("dense", "quantum"): "ce-qd",
        }[(self.encoder, self.decoder)]

    def _build(self, n_vertices, rng):
        for name in ("encoder", "decoder"):
            if getattr(self, name) not in PART_KINDS:
                raise ValueError(f"{name} must be one of {PART_KINDS}")
        if self.bottleneck not in BOTTLENECKS:
            raise ValueError(f"bottleneck must be one of {BOTTLENECKS}")
        n = self.n_qubits or qubits_for(n_vertices)
        check_qubit_layout(n_vertices, n, self.n_discard)
        kept, discarded = default_partition(n, self.n_discard)

        def part(kind):
            if kind == "dense":
                return L.DenseLayer(2**n, 2**n, normalize_output=True)
            circuit, params = build_circuit(self.n_blocks, self.block, self.architecture, self.init,
                                            n, kept, discarded, rng=rng)
            return L.CircuitLayer(circuit, params)

        enc = part(self.encoder)
        neck = L.Marginalise(self.n_discard) if self.bottleneck == "marginalise" else L.SubvectorElu(self.n_discard)
        dec = part(self.decoder)
        self.n_qubits_ = n
        self.network_ = L.Network([enc, neck, dec, L.Readout()])
        return self.network_.init_params(rng)

    def fit(self, X, y=None, callback=None):
        """Train on ``X``; ``callback(step, self)`` fires at step 0 and after every update."""
        frames = self._prepare(X)
        params = self._build(self.n_vertices_, substream(self.random_state, STREAM_INIT))
        normed = self._normalised(frames)
        inputs = [encode_point_cloud(pc, self.n_qubits_) for pc in normed]

        def value_and_grad(p, i):
            return L.loss_gradient(self.network_, p, inputs[i],
                                   lambda a: reconstruction_loss_and_grad(a, normed[i]))

        return self._train(self.network_, params, value_and_grad, len(inputs), callback)

    def forward(self, points_normalised):
        """Output amplitudes and latent probabilities for one normalised cloud."""
        check_is_fitted(self, "params_")
        psi = encode_point_cloud(points_normalised, self.n_qubits_)
        restate, _ = self.network_.forward(self.params_, psi, stop=2)
        alpha = self.network_.run(self.params_, restate, start=2)
        return alpha, np.abs(restate[:: 2**self.n_discard]) ** 2

    def transform(self, X):
        check_is_fitted(self, "params_")
        return np.array([self.forward(pc)[1] for pc in self._normalised(X)])

    def inverse_transform(self, Z):
        check_is_fitted(self, "params_")
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        out = []
        for probs in Z:
            restate = np.zeros(probs.shape[0] * 2**self.n_discard, dtype=complex)
            restate[:: 2**self.n_discard] = np.sqrt(np.maximum(probs, 0.0))
            alpha = self.network_.run(self.params_, restate, start=2)
            out.append(decode_to_points(alpha, self.n_vertices_, self.norm_))
        return np.array(out)

    def predict_amplitudes(self, X):
        check_is_fitted(self, "params_")
        return np.array([self.forward(pc)[0] for pc in self._normalised(X)])

    def predict(self, X):
        return decode_to_points(self.predict_amplitudes(X), self.n_vertices_, self.norm_)

    def loss(self, X) -> float:
        """Mean reconstruction loss over ``X``."""
        normed = self._normalised(X)
        alphas = self.predict_amplitudes(X)
        return float(np.mean([reconstruction_loss_and_grad(a, pc)[0] for a, pc in zip(alphas, normed)]))

    def parameter_groups(self):
        """Encoder and decoder parameter vectors."""
        parts = self.network_.split(self.params_)
        return {"encoder": parts[0], "decoder": parts[2]}

    def _restore(self, n_vertices, norm, groups):
        self.n_vertices_ = n_vertices
        self.norm_ = norm
        self._build(n_vertices, substream(self.random_state, STREAM_INIT))
        self.params_ = np.concatenate([np.asarray(groups["encoder"], float), np.asarray(groups["decoder"], float)])
        if self.params_.shape[0] != self.network_.n_params:
            raise ValueError("checkpoint parameter count does not match the architecture")
        return self


class FullyConnectedAutoencoder(_OptimiserParamsMixin, BaseEstimator):
    """Dense 3V -> latent -> 3V auto-encoder with an ELU bottleneck.

    Works on raw normalised coordinates (no auxiliaries, no padding). With
    ``rank`` set, each dense map is factorised through ``rank`` units; with
    ``match_params`` set (and ``rank`` None) the rank is chosen so the
    parameter count is closest to ``match_params``.
    """

    def __init__(self, *, latent_size=16, rank=None, match_params=None, epochs=1, max_steps=None,
                 learning_rate=1e-2, beta1=0.9, beta2=0.99, adam_eps=1e-8, lr_factor=0.5,
                 lr_patience=200, lr_threshold=1e-4, min_lr=1e-5, ema_decay=0.99,
                 normalization=None, random_state=0):
        self.latent_size = latent_size
        self.rank = rank
        self.match_params = match_params
        self.epochs = epochs
        self.max_steps = max_steps
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.lr_factor = lr_factor
        self.lr_patience = lr_patience
        self.lr_threshold = lr_threshold
        self.min_lr = min_lr
        self.ema_decay = ema_decay
        self.normalization = normalization
        self.random_state = random_state

    model_kind = "fc"

    def _build(self, n_vertices, rng):
        d, k = 3 * n_vertices, self.latent_size
        rank = self.rank
        if rank is None and self.match_params is not None:
            rank = closest_multiple(int(self.match_params), 2 * (d + k))
        self.rank_ = rank
        if rank is None:
            enc = [L.DenseLayer(d, k)]
            dec = [L.DenseLayer(k, d)]
        else:
            enc = [L.DenseLayer(d, rank), L.DenseLayer(rank, k)]
            dec = [L.DenseLayer(k, rank), L.DenseLayer(rank, d)]
        self.n_encoder_layers_ = len(enc)
        self.network_ = L.Network(enc + [L.Elu()] + dec)
        return self.network_.init_params(rng)

    def fit(self, X, y=None, callback=None):
        frames = self._prepare(X)
        params = self._build(self.n_vertices_, substream(self.random_state, STREAM_INIT))
        normed = self._normalised(frames).reshape(len(frames), -1)

        def value_and_grad(p, i):
            return L.loss_gradient(self.network_, p, normed[i], lambda y: vertex_loss_and_grad(y, normed[i]))

        return self._train(self.network_, params, value_and_grad, len(normed), callback)

    @property
    def n_params_(self):
        return self.network_.n_params

    def transform(self, X):
        check_is_fitted(self, "params_")
        flat = self._normalised(X).reshape(len(check_point_clouds(X)), -1)
        stop = self.n_encoder_layers_ + 1
        return np.array([self.network_.forward(self.params_, x, stop=stop)[0] for x in flat])

    def predict(self, X):
        check_is_fitted(self, "params_")
        flat = self._normalised(X).reshape(len(check_point_clouds(X)), -1)
        out = np.array([self.network_.run(self.params_, x) for x in flat])
        return denormalize(out.reshape(len(flat), -1, 3), self.norm_)

    def parameter_groups(self):
        cut = self.network_.offsets[self.n_encoder_layers_]
        return {"encoder": self.params_[:cut], "decoder": self.params_[cut:]}

    def _restore(self, n_vertices, norm, groups):
        self.n_vertices_ = n_vertices
        self.norm_ = norm
        self._build(n_vertices, substream(self.random_state, STREAM_INIT))
        self.params_ = np.concatenate([np.asarray(groups["encoder"], float), np.asarray(groups["decoder"], float)])
        if self.params_.shape[0] != self.network_.n_params:
            raise ValueError("checkpoint parameter count does not match the architecture")
        return self


class ConstantBaseline(BaseEstimator):
    """Predicts the vertexwise mean of the training frames for every input."""

    model_kind = "constant"

    def __init__(self, normalization=None, random_state=0):
        self.normalization = normalization
        self.random_state = random_state

    def fit(self, X, y=None, callback=None):
        frames = check_point_clouds(X)
        if frames.shape[0] == 0:
            raise ValueError("constant baseline needs at least one frame")
        self.n_vertices_ = frames.shape[1]
        self.mean_ = frames.mean(axis=0)
        self.norm_ = self.normalization if self.normalization is not None else compute_normalization(frames)
        self.log_ = None
        if callback is not None:
            callback(0, self)
        return self

    def predict(self, X):
        check_is_fitted(self, "mean_")
        frames = check_point_clouds(X, self.n_vertices_)
        return np.broadcast_to(self.mean_, frames.shape).copy()

    def score(self, X, y=None):
        return -mean_euclidean_distance(self.predict(X), check_point_clouds(X))

    def parameter_groups(self):
        return {"mean": self.mean_.ravel()}

    def _restore(self, n_vertices, norm, groups):
        self.n_vertices_ = n_vertices
        self.norm_ = norm
        self.mean_ = np.asarray(groups["mean"], float).reshape(n_vertices, 3)
        return self


def constant_fit(frames) -> np.ndarray:
    """Vertexwise mean cloud of a nonempty training set."""
    return ConstantBaseline().fit(frames).mean_
