"""Training configuration and end-to-end runs (fit normalisation, split, train, evaluate)."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checkpoint
from .circuits import params_per_block
from .data import MotionDataset, SplitSpec, chunked_split, compute_normalization, load_csv, select_joints
from .encoding import per_frame_distance, qubits_for
from .errors import ConfigError
from .estimators import ConstantBaseline, FullyConnectedAutoencoder, QuantumAutoencoder
from .training import TrainLog

log = logging.getLogger(__name__)

MODEL_KINDS = ("quantum", "mimic", "qe-cd", "ce-qd", "fc", "constant")
_PARTS = {"quantum": ("quantum", "quantum"), "mimic": ("dense", "dense"),
          "qe-cd": ("quantum", "dense"), "ce-qd": ("dense", "quantum")}
_CHOICES = {
    "block": ("A", "B", "C", "D"),
    "architecture": ("repeat", "inverse"),
    "init": ("random", "identity"),
    "bottleneck": ("marginalise", "elu"),
    "model": MODEL_KINDS,
}


@dataclass
class TrainConfig:
    """Every knob of a run. Defaults give the full-size 16-joint quantum setup except ``epochs``."""

    data: str | None = None
    fps: float | None = None
    train_seconds: float = 16.0
    test_seconds: float = 4.0
    joints: list[int] | None = None
    n_qubits: int | None = None
    n_discard: int = 2
    n_blocks: int = 8
    block: str = "B"
    architecture: str = "repeat"
    init: str = "identity"
    bottleneck: str = "marginalise"
    model: str = "quantum"
    fc_rank: int | None = None
    fc_match: bool = False
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.99
    adam_eps: float = 1e-8
    lr_factor: float = 0.5
    lr_patience: int = 200
    lr_threshold: float = 1e-4
    min_lr: float = 1e-5
    ema_decay: float = 0.99
    epochs: int = 1
    max_steps: int | None = None
    seed: int = 0
    out: str = "runs/default"
    checkpoint_interval: int = 0
    eval_interval: int = 0

    def validate(self, n_vertices: int | None = None) -> "TrainConfig":
        for key, choices in _CHOICES.items():
            if getattr(self, key) not in choices:
                raise ConfigError(f"{key} must be one of {choices}, got {getattr(self, key)!r}", key)
        for key in ("learning_rate", "min_lr", "train_seconds", "test_seconds"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive", key)
        if not 0 < self.lr_factor < 1:
            raise ConfigError("lr_factor must lie in (0, 1)", "lr_factor")
        if self.n_blocks < 1:
            raise ConfigError("n_blocks must be >= 1", "n_blocks")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0", "epochs")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("max_steps must be >= 0", "max_steps")
        if self.fps is not None and not self.fps > 0:
            raise ConfigError("fps must be positive", "fps")
        if n_vertices is not None:
            n = self.qubits(n_vertices)
            if 4 * n_vertices > 2**n:
                raise ConfigError(f"{n_vertices} vertices do not fit in {n} qubits", "n_qubits")
            if not 0 < self.n_discard < n:
                raise ConfigError(f"n_discard must lie in (0, {n})", "n_discard")
        return self

    def qubits(self, n_vertices: int) -> int:
        return self.n_qubits if self.n_qubits is not None else qubits_for(n_vertices)

    def quantum_param_count(self, n_vertices: int) -> int:
        """Parameters of an encoder + decoder pair of quantum circuits."""
        return 2 * self.n_blocks * params_per_block(self.block, self.qubits(n_vertices), self.n_discard)


def _parse_value(key: str, typ: str, raw: str):
    raw = raw.strip()
    optional = "None" in typ
    if optional and raw.lower() in ("", "none"):
        return None
    base = typ.replace("| None", "").strip()
    try:
        if base == "int":
            return int(raw)
        if base == "float":
            return float(raw)
        if base == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if base == "list[int]":
            return [int(x) for x in raw.replace(" ", "").split(",") if x]
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {base}", key) from None


_FIELDS = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def apply_overrides(config: TrainConfig, pairs: dict) -> TrainConfig:
    updates = {}
    for key, raw in pairs.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}", key)
        updates[key] = raw if not isinstance(raw, str) else _parse_value(key, _FIELDS[key], raw)
    return dataclasses.replace(config, **updates)


def parse_config(text: str, base: TrainConfig | None = None) -> TrainConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key)
        pairs[key] = value
    return apply_overrides(base or TrainConfig(), pairs)


def load_config(path) -> TrainConfig:
    return parse_config(Path(path).read_text())


def format_config(config: TrainConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        lines.append(f"{f.name} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


def make_estimator(config: TrainConfig, n_vertices: int, norm=None):
    """Unfitted estimator for ``config.model``."""
    common = dict(
        epochs=config.epochs, max_steps=config.max_steps, learning_rate=config.learning_rate,
        beta1=config.beta1, beta2=config.beta2, adam_eps=config.adam_eps, lr_factor=config.lr_factor,
        lr_patience=config.lr_patience, lr_threshold=config.lr_threshold, min_lr=config.min_lr,
        ema_decay=config.ema_decay, normalization=norm, random_state=config.seed,
    )
    if config.model == "constant":
        return ConstantBaseline(normalization=norm, random_state=config.seed)
    n = config.qubits(n_vertices)
    if config.model == "fc":
        match = config.quantum_param_count(n_vertices) if config.fc_match and config.fc_rank is None else None
        return FullyConnectedAutoencoder(latent_size=2 ** (n - config.n_discard), rank=config.fc_rank,
                                         match_params=match, **common)
    encoder, decoder = _PARTS[config.model]
    return QuantumAutoencoder(
        encoder=encoder, decoder=decoder, n_blocks=config.n_blocks, block=config.block,
        architecture=config.architecture, init=config.init, n_discard=config.n_discard,
        n_qubits=config.n_qubits, bottleneck=config.bottleneck, **common,
    )


def evaluate(estimator, frames):
    """Mean Euclidean distance (cm) over frames and the per-frame values."""
    frames = getattr(frames, "frames", frames)
    per_frame = per_frame_distance(estimator.predict(frames), frames)
    return float(np.mean(per_frame)), per_frame


def prepare_data(config: TrainConfig, dataset: MotionDataset | None = None):
    """Load, subset, fit the normalisation on all frames, then split."""
    if dataset is None:
        if config.data is None:
            raise ConfigError("no dataset given", "data")
        dataset = load_csv(config.data, fps=config.fps)
    elif config.fps is not None:
        dataset = MotionDataset(dataset.frames, config.fps, dataset.joint_names)
    if config.joints is not None:
        dataset = select_joints(dataset, config.joints)
    norm = compute_normalization(dataset)
    train, test = chunked_split(dataset, SplitSpec(config.train_seconds, config.test_seconds))
    return dataset, norm, train, test


def train(config: TrainConfig, dataset: MotionDataset | None = None, out_dir=None):
    """Fit ``config.model`` on the training split; returns (estimator, TrainLog).

    Evaluates both splits at step 0, every ``eval_interval`` steps and at the
    end. When ``out_dir`` is given, checkpoints are written every
    ``checkpoint_interval`` steps and at the end, with the log as CSV.
    """
    dataset, norm, train_set, test_set = prepare_data(config, dataset)
    config.validate(dataset.n_vertices)
    if len(train_set) == 0 or len(test_set) == 0:
        raise ConfigError("split leaves an empty train or test set", "train_seconds")
    if config.epochs * len(train_set) > 1_000_000 and config.max_steps is None:
        log.warning("%d epochs x %d frames is far beyond desk scale", config.epochs, len(train_set))
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    est = make_estimator(config, dataset.n_vertices, norm)
    evals = []

    def do_eval(step, model):
        for name, split in (("train", train_set), ("test", test_set)):
            evals.append((step, name, evaluate(model, split)[0]))

    def callback(step, model):
        if step == 0 or (config.eval_interval and step % config.eval_interval == 0):
            do_eval(step, model)
        if out is not None and step > 0 and config.checkpoint_interval and step % config.checkpoint_interval == 0:
            checkpoint.save(model, out / f"checkpoint_step{step:07d}.json")

    est.fit(train_set.frames, callback=callback)
    train_log = getattr(est, "log_", None) or TrainLog()
    final_step = train_log.steps[-1][0] if train_log.steps else 0
    if not evals or evals[-1][0] != final_step:
        do_eval(final_step, est)
    for row in evals:
        train_log.record_eval(*row)
    est.log_ = train_log
    if hasattr(est, "network_"):
        log.info("%s model with %d parameters", config.model, est.network_.n_params)
    if out is not None:
        checkpoint.save(est, out / "checkpoint.json")
        (out / "train_log.csv").write_text(train_log.to_csv())
        (out / "config.txt").write_text(format_config(config))
    return est, train_log
