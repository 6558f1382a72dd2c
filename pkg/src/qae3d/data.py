"""Motion datasets: CSV I/O, cube normalisation, chunked splits, synthetic chains."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

CSV_HEADER = ["frame", "joint", "x", "y", "z"]
DEFAULT_FPS = 12.0


@dataclass(frozen=True)
class NormalizationParams:
    """Shift ``v_min`` (metres) and isotropic scale ``s`` (metres) of the unit cube."""

    v_min: np.ndarray
    s: float

    def __post_init__(self):
        object.__setattr__(self, "v_min", np.asarray(self.v_min, dtype=float).reshape(3))
        if not self.s > 0:
            raise ValueError("scale must be positive")

    def to_dict(self):
        return {"v_min": [float(v) for v in self.v_min], "s": float(self.s)}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["v_min"], dtype=float), float(d["s"]))


@dataclass
class MotionDataset:
    frames: np.ndarray  # (n_frames, V, 3), metres
    fps: float = DEFAULT_FPS
    joint_names: list[str] | None = field(default=None)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.ndim != 3 or self.frames.shape[2] != 3:
            raise DataError(f"frames must have shape (n_frames, V, 3), got {self.frames.shape}")
        if not self.fps > 0:
            raise DataError("fps must be positive")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.frames.shape[1]

    def __len__(self):
        return self.n_frames


def compute_normalization(frames) -> NormalizationParams:
    """Tight cube around every vertex of every frame; degenerate boxes get s = 1."""
    frames = np.asarray(getattr(frames, "frames", frames), dtype=float)
    if frames.size == 0:
        raise DataError("cannot normalise an empty dataset")
    pts = frames.reshape(-1, 3)
    v_min = pts.min(axis=0)
    s = float((pts.max(axis=0) - v_min).max())
    return NormalizationParams(v_min, s if s > 0 else 1.0)


def normalize(points, params: NormalizationParams) -> np.ndarray:
    return (np.asarray(points, dtype=float) - params.v_min) / params.s


def denormalize(points, params: NormalizationParams) -> np.ndarray:
    return np.asarray(points, dtype=float) * params.s + params.v_min


def clamp_unit(points) -> np.ndarray:
    """Clip normalised coordinates into [0, 1], warning when anything moves."""
    points = np.asarray(points, dtype=float)
    clipped = np.clip(points, 0.0, 1.0)
    if not np.array_equal(clipped, points):
        log.warning("clamped %d coordinates into [0, 1]", int(np.sum(clipped != points)))
    return clipped


@dataclass(frozen=True)
class SplitSpec:
    train_seconds: float = 16.0
    test_seconds: float = 4.0

    def __post_init__(self):
        if not (self.train_seconds > 0 and self.test_seconds > 0):
            raise ValueError("split durations must be positive")


def split_indices(n_frames: int, fps: float, spec: SplitSpec = SplitSpec()):
    chunk = int(round((spec.train_seconds + spec.test_seconds) * fps))
    ratio = spec.train_seconds / (spec.train_seconds + spec.test_seconds)
    train, test = [], []
    for start in range(0, n_frames, chunk):
        stop = min(start + chunk, n_frames)
        if stop - start == chunk:
            n_train = int(round(spec.train_seconds * fps))
        else:
            n_train = math.floor((stop - start) * ratio)
        train.extend(range(start, start + n_train))
        test.extend(range(start + n_train, stop))
    return np.array(train, dtype=int), np.array(test, dtype=int)


def chunked_split(dataset: MotionDataset, spec: SplitSpec = SplitSpec()):
    """Per chunk of ``train+test`` seconds, the first part trains and the rest tests."""
    train, test = split_indices(dataset.n_frames, dataset.fps, spec)
    return (
        MotionDataset(dataset.frames[train], dataset.fps, dataset.joint_names),
        MotionDataset(dataset.frames[test], dataset.fps, dataset.joint_names),
    )


def select_joints(dataset: MotionDataset, indices) -> MotionDataset:
    indices = [int(i) for i in indices]
    if not indices:
        raise DataError("joint subset must be nonempty")
    bad = [i for i in indices if not 0 <= i < dataset.n_vertices]
    if bad:
        raise DataError(f"joint indices out of range: {bad}")
    names = None if dataset.joint_names is None else [dataset.joint_names[i] for i in indices]
    return MotionDataset(dataset.frames[:, indices, :], dataset.fps, names)


def load_csv(path, fps: float | None = None) -> MotionDataset:
    """Read the ``frame,joint,x,y,z`` format; ``fps`` overrides any ``# fps=`` comment."""
    path = Path(path)
    header_fps = None
    rows: dict[int, dict[int, tuple[float, float, float]]] = {}
    seen_header = False
    with path.open(newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                body = text[1:].strip()
                if body.startswith("fps="):
                    try:
                        header_fps = float(body[4:])
                    except ValueError as exc:
                        raise DataError(f"{path}:{lineno}: bad fps comment {text!r}") from exc
                continue
            fields = next(csv.reader([text]))
            if not seen_header:
                if [f.strip() for f in fields] != CSV_HEADER:
                    raise DataError(f"{path}:{lineno}: expected header {','.join(CSV_HEADER)}")
                seen_header = True
                continue
            if len(fields) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 fields, got {len(fields)}")
            try:
                frame, joint = int(fields[0]), int(fields[1])
                xyz = tuple(float(f) for f in fields[2:])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: malformed row {text!r}") from exc
            if joint in rows.setdefault(frame, {}):
                raise DataError(f"{path}:{lineno}: duplicate joint {joint} in frame {frame}")
            rows[frame][joint] = xyz
    if not seen_header:
        raise DataError(f"{path}: missing header")
    if not rows:
        raise DataError(f"{path}: no data rows")
    frame_ids = sorted(rows)
    if frame_ids != list(range(len(frame_ids))):
        raise DataError(f"{path}: frame ids must be contiguous from 0")
    n_joints = len(rows[0])
    frames = np.empty((len(frame_ids), n_joints, 3))
    for f in frame_ids:
        joints = rows[f]
        if sorted(joints) != list(range(n_joints)):
            raise DataError(
                f"{path}: frame {f} has joints {sorted(joints)}, expected 0..{n_joints - 1}"
            )
        for j, xyz in joints.items():
            frames[f, j] = xyz
    use_fps = fps if fps is not None else (header_fps if header_fps is not None else DEFAULT_FPS)
    return MotionDataset(frames, use_fps)


def write_csv(dataset: MotionDataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# fps={float(dataset.fps)!r}\n")
        fh.write(",".join(CSV_HEADER) + "\n")
        for f, frame in enumerate(dataset.frames):
            for j, (x, y, z) in enumerate(frame):
                fh.write(f"{f},{j},{float(x)!r},{float(y)!r},{float(z)!r}\n")


def synthesize_chain(
    n_frames: int,
    n_joints: int,
    seed: int = 0,
    fps: float = DEFAULT_FPS,
    amplitude: float = 0.5,
    freq_range: tuple[float, float] = (0.05, 0.4),
) -> MotionDataset:
    """Articulated chain of unit-length segments driven by seeded sinusoids.

    Each non-root joint has a yaw and a pitch angle relative to its parent,
    ``base + amplitude * sin(2 pi f t + phase)`` with random base, frequency
    and phase. Angles accumulate down the chain.
    """
    if n_joints < 2:
        raise ValueError("a chain needs at least 2 joints")
    rng = np.random.default_rng(seed)
    n_seg = n_joints - 1
    base = rng.uniform(-0.6, 0.6, size=(2, n_seg))
    freq = rng.uniform(*freq_range, size=(2, n_seg))
    phase = rng.uniform(0, 2 * np.pi, size=(2, n_seg))
    t = np.arange(n_frames)[:, None, None] / fps
    angles = base + amplitude * np.sin(2 * np.pi * freq * t + phase)  # (F, 2, n_seg)
    yaw = np.cumsum(angles[:, 0], axis=1)
    pitch = np.cumsum(angles[:, 1], axis=1)
    steps = np.stack(
        [np.cos(pitch) * np.cos(yaw), np.cos(pitch) * np.sin(yaw), np.sin(pitch)], axis=-1
    )
    frames = np.concatenate([np.zeros((n_frames, 1, 3)), np.cumsum(steps, axis=1)], axis=1)
    names = [f"joint{j}" for j in range(n_joints)]
    return MotionDataset(frames, fps, names)
