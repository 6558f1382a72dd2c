"""Reconstruction loss, Adam, the plateau schedule and the batch-size-1 optimisation loop."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError


def _targets(points, n_amplitudes):
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    v = pts.shape[0]
    scale = np.sqrt(3 * v)
    coords = pts.ravel() / scale
    aux = np.sqrt(np.maximum(3.0 - (pts**2).sum(axis=1), 0.0)) / scale
    if 4 * v > n_amplitudes:
        raise ValueError("amplitude vector too short for the vertex count")
    return v, coords, aux


def reconstruction_loss(alpha, points) -> float:
    """Per-vertex coordinate distance + auxiliary error + padding mass (all in amplitude units)."""
    return reconstruction_loss_and_grad(alpha, points)[0]


def reconstruction_loss_and_grad(alpha, points):
    alpha = np.asarray(alpha, dtype=float)
    v, coords, aux = _targets(points, alpha.shape[0])
    diff = (alpha[: 3 * v] - coords).reshape(v, 3)
    dist = np.sqrt((diff**2).sum(axis=1))
    aux_err = alpha[3 * v : 4 * v] - aux
    pad = alpha[4 * v :]
    loss = float(dist.sum() + np.abs(aux_err).sum() + np.abs(pad).sum())

    grad = np.zeros_like(alpha)
    safe = np.where(dist > 0, dist, 1.0)
    grad[: 3 * v] = np.where(dist[:, None] > 0, diff / safe[:, None], 0.0).ravel()
    grad[3 * v : 4 * v] = np.sign(aux_err)
    grad[4 * v :] = np.sign(pad)
    return loss, grad


def vertex_loss_and_grad(pred, points):
    """Sum of per-vertex Euclidean distances between flat coordinate vectors."""
    pred = np.asarray(pred, dtype=float)
    diff = (pred - np.asarray(points, dtype=float).ravel()).reshape(-1, 3)
    dist = np.sqrt((diff**2).sum(axis=1))
    safe = np.where(dist > 0, dist, 1.0)
    grad = np.where(dist[:, None] > 0, diff / safe[:, None], 0.0).ravel()
    return float(dist.sum()), grad


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n, **kw):
        return cls(np.zeros(n), np.zeros(n), **kw)


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update; returns new params and state."""
    grads = np.asarray(grads, dtype=float)
    if grads.shape != state.m.shape:
        raise ValueError("gradient and optimiser state lengths differ")
    if not np.all(np.isfinite(grads)):
        raise NumericalError("non-finite gradient passed to Adam")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grads
    v = state.beta2 * state.v + (1 - state.beta2) * grads**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new = np.asarray(params, dtype=float) - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new, replace(state, m=m, v=v, t=t)


@dataclass(frozen=True)
class ScheduleState:
    """Reduce-on-plateau bookkeeping."""

    lr: float = 1e-2
    factor: float = 0.5
    patience: int = 200
    min_lr: float = 1e-5
    threshold: float = 1e-4
    best_loss: float = math.inf
    steps_since_improvement: int = 0

    def __post_init__(self):
        if not 0 < self.factor < 1:
            raise ValueError("factor must lie in (0, 1)")
        if not self.min_lr > 0:
            raise ValueError("min_lr must be positive")


def schedule_update(state: ScheduleState, loss: float) -> ScheduleState:
    if loss < state.best_loss - state.threshold:
        return replace(state, best_loss=loss, steps_since_improvement=0)
    count = state.steps_since_improvement + 1
    if count >= state.patience:
        return replace(state, lr=max(state.lr * state.factor, state.min_lr), steps_since_improvement=0)
    return replace(state, steps_since_improvement=count)


@dataclass
class OptimConfig:
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    lr_factor: float = 0.5
    lr_patience: int = 200
    lr_threshold: float = 1e-4
    min_lr: float = 1e-5
    ema_decay: float = 0.99


@dataclass
class TrainLog:
    steps: list = field(default_factory=list)  # (step, loss, lr)
    evals: list = field(default_factory=list)  # (step, split, metric_cm)

    def record_step(self, step, loss, lr):
        if self.steps and step <= self.steps[-1][0]:
            raise ValueError("steps must be strictly increasing")
        self.steps.append((int(step), float(loss), float(lr)))

    def record_eval(self, step, split, metric):
        self.evals.append((int(step), str(split), float(metric)))

    def final_eval(self, split):
        rows = [e for e in self.evals if e[1] == split]
        return rows[-1][2] if rows else None

    def to_csv(self) -> str:
        """Step rows ``step,loss,lr`` and eval rows ``step,split,metric_cm`` in one table."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "loss", "lr", "split", "metric_cm"])
        rows = [(s, repr(l), repr(r), "", "") for s, l, r in self.steps]
        rows += [(s, "", "", split, repr(m)) for s, split, m in self.evals]
        rows.sort(key=lambda r: (r[0], r[3] != "", r[3]))
        w.writerows(rows)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrainLog":
        log = cls()
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != ["step", "loss", "lr", "split", "metric_cm"]:
            raise ValueError("not a training log: unexpected header")
        for row in reader:
            if row["split"]:
                log.evals.append((int(row["step"]), row["split"], float(row["metric_cm"])))
            else:
                log.steps.append((int(row["step"]), float(row["loss"]), float(row["lr"])))
        return log


def run_optimiser(value_and_grad, params, n_samples, *, epochs=1, max_steps=None, rng=None,
                  config: OptimConfig | None = None, log: TrainLog | None = None, callback=None):
    """Batch-size-1 Adam over reshuffled epochs with an EMA-smoothed plateau schedule.

    ``value_and_grad(params, i)`` returns the loss of sample ``i`` and its
    gradient. ``callback(step, params)`` runs after every update.
    """
    config = config or OptimConfig()
    rng = np.random.default_rng(0) if rng is None else rng
    log = TrainLog() if log is None else log
    params = np.array(params, dtype=float)
    adam = AdamState.zeros(params.shape[0], lr=config.learning_rate, beta1=config.beta1,
                           beta2=config.beta2, eps=config.eps)
    sched = ScheduleState(lr=config.learning_rate, factor=config.lr_factor, patience=config.lr_patience,
                          min_lr=config.min_lr, threshold=config.lr_threshold)
    ema = None
    step = 0
    for _ in range(epochs):
        for i in rng.permutation(n_samples):
            if max_steps is not None and step >= max_steps:
                return params, log
            loss, grad = value_and_grad(params, int(i))
            if not math.isfinite(loss):
                raise NumericalError(f"non-finite loss at step {step + 1} (sample {int(i)})")
            adam = replace(adam, lr=sched.lr)
            params, adam = adam_step(params, grad, adam)
            step += 1
            log.record_step(step, loss, sched.lr)
            ema = loss if ema is None else config.ema_decay * ema + (1 - config.ema_decay) * loss
            sched = schedule_update(sched, ema)
            if callback is not None:
                callback(step, params)
    return params, log
