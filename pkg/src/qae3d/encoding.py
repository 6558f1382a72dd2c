"""Point cloud <-> amplitude vector conversion and the reconstruction metric."""
from __future__ import annotations

import numpy as np

from .data import NormalizationParams, denormalize


def qubits_for(n_vertices: int) -> int:
    """Smallest N with ``4 V <= 2**N``."""
    return max(1, int(np.ceil(np.log2(4 * n_vertices))))


def encode_point_cloud(points, n_qubits: int) -> np.ndarray:
    """Amplitude layout: coordinates at 0..3V-1, auxiliaries at 3V..4V-1, zeros after.

    Each vertex contributes squared mass 3/(3V), so the result has unit norm
    whenever every coordinate lies in [0, 1].
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    v = pts.shape[0]
    if 4 * v > 2**n_qubits:
        raise ValueError(f"{v} vertices need {4 * v} amplitudes, only {2**n_qubits} available")
    if np.any(pts < 0) or np.any(pts > 1):
        raise ValueError("normalised coordinates must lie in [0, 1]")
    scale = np.sqrt(3 * v)
    amps = np.zeros(2**n_qubits)
    amps[: 3 * v] = pts.ravel() / scale
    amps[3 * v : 4 * v] = np.sqrt(np.maximum(3.0 - (pts**2).sum(axis=1), 0.0)) / scale
    return amps


def decode_to_points(alpha, n_vertices: int, norm: NormalizationParams | None = None) -> np.ndarray:
    """Vertices from the first 3V amplitudes, denormalised when ``norm`` is given."""
    alpha = np.asarray(alpha)
    if alpha.shape[-1] < 4 * n_vertices:
        raise ValueError("amplitude vector too short for the vertex count")
    pts = np.sqrt(3 * n_vertices) * np.real(alpha[..., : 3 * n_vertices])
    pts = pts.reshape(alpha.shape[:-1] + (n_vertices, 3))
    return pts if norm is None else denormalize(pts, norm)


def per_frame_distance(pred, gt) -> np.ndarray:
    """Mean joint distance of every frame, in centimetres (inputs in metres)."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    return np.linalg.norm(pred - gt, axis=-1).mean(axis=-1) * 100.0


def mean_euclidean_distance(pred, gt) -> float:
    """Average over joints, then frames, of the Euclidean error in cm."""
    return float(np.mean(per_frame_distance(pred, gt)))
