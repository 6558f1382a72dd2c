"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .data import MotionDataset


def check_point_clouds(X, n_vertices=None) -> np.ndarray:
    """Coerce ``X`` to a float array of shape (n_frames, V, 3).

    Accepts a :class:`MotionDataset`, an (n, V, 3) array or a flat (n, 3V)
    array whose rows are x0, y0, z0, x1, ...
    """
    if isinstance(X, MotionDataset):
        X = X.frames
    arr = check_array(X, allow_nd=True, dtype=np.float64, ensure_all_finite=True)
    if arr.ndim == 2:
        if arr.shape[1] % 3:
            raise ValueError(f"flat input needs 3V columns, got {arr.shape[1]}")
        arr = arr.reshape(arr.shape[0], -1, 3)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected point clouds of shape (n, V, 3), got {arr.shape}")
    if n_vertices is not None and arr.shape[1] != n_vertices:
        raise ValueError(f"model was fitted on {n_vertices} vertices, got {arr.shape[1]}")
    return arr


def check_qubit_layout(n_vertices: int, n_qubits: int, n_discard: int) -> None:
    if 4 * n_vertices > 2**n_qubits:
        raise ValueError(f"{n_vertices} vertices need 2**N >= {4 * n_vertices}, got N={n_qubits}")
    if not 0 < n_discard < n_qubits:
        raise ValueError(f"n_discard must lie in (0, {n_qubits}), got {n_discard}")
