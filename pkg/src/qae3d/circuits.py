"""Basic blocks A-D, repeat/inverse blocks and J-block circuits."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np


class BlockKind(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"


class Architecture(str, enum.Enum):
    REPEAT = "repeat"
    INVERSE = "inverse"


class InitScheme(str, enum.Enum):
    RANDOM = "random"
    IDENTITY = "identity"


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    control: int | None = None
    param_index: int = 0

    def __post_init__(self):
        if (self.control is None) != (not self.kind.startswith("C")):
            raise ValueError(f"gate {self.kind} control mismatch")
        if self.control is not None and self.control == self.target:
            raise ValueError("control and target must differ")


@dataclass(frozen=True)
class BlockBoundary:
    """Gate-index range of one block ``X = S F``: F is [start, mid), S is [mid, stop)."""

    start: int
    mid: int
    stop: int


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    blocks: tuple[BlockBoundary, ...] = field(default=())
    architecture: Architecture = Architecture.REPEAT

    @property
    def param_count(self) -> int:
        return len(self.gates)

    def inverse(self, params) -> tuple["CircuitSpec", np.ndarray]:
        """Reversed gate list with negated angles; undoes this circuit."""
        return CircuitSpec(self.n_qubits, tuple(reversed(self.gates))), -np.asarray(params, dtype=float)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "param_count": self.param_count,
            "architecture": Architecture(self.architecture).value,
            "blocks": [[b.start, b.mid, b.stop] for b in self.blocks],
            "gates": [
                {"kind": g.kind, "control": g.control, "target": g.target, "param_index": g.param_index}
                for g in self.gates
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _ring(n_qubits: int) -> list[tuple[str, int, int | None]]:
    return [("CRX", (i + 1) % n_qubits, i) for i in range(n_qubits)]


def _layer(kind: str, n_qubits: int) -> list[tuple[str, int, int | None]]:
    return [(kind, q, None) for q in range(n_qubits)]


def _check_partition(n_qubits, kept, discarded):
    kept = sorted(kept)
    discarded = sorted(discarded)
    if set(kept) & set(discarded) or sorted(kept + discarded) != list(range(n_qubits)):
        raise ValueError("kept and discarded qubits must partition range(n_qubits)")
    return kept, discarded


def default_partition(n_qubits: int, n_discard: int) -> tuple[list[int], list[int]]:
    """Kept subsystem A = first qubits, discarded B = last ``n_discard`` qubits."""
    return list(range(n_qubits - n_discard)), list(range(n_qubits - n_discard, n_qubits))


def build_basic_block(kind, n_qubits, kept=None, discarded=None) -> list[Gate]:
    """Gate list of one basic block with placeholder parameter indices 0..G-1.

    A: R_Y layer, then a ring of CR_X (control i -> target i+1 mod N).
    B: A plus CR_X from every discarded qubit to every kept qubit.
    C: R_Y layer, R_Z layer, ring.
    D: R_Y layer, ring, R_Y layer.
    """
    kind = BlockKind(kind)
    if n_qubits < 2:
        raise ValueError("basic blocks need at least 2 qubits")
    kept = list(range(n_qubits)) if kept is None else kept
    discarded = [] if discarded is None else discarded
    kept, discarded = _check_partition(n_qubits, list(kept), list(discarded))

    if kind is BlockKind.A:
        layout = _layer("RY", n_qubits) + _ring(n_qubits)
    elif kind is BlockKind.B:
        if not kept or not discarded:
            raise ValueError("block B needs nonempty kept and discarded qubit sets")
        layout = _layer("RY", n_qubits) + _ring(n_qubits)
        layout += [("CRX", a, b) for b in discarded for a in kept]
    elif kind is BlockKind.C:
        layout = _layer("RY", n_qubits) + _layer("RZ", n_qubits) + _ring(n_qubits)
    else:
        layout = _layer("RY", n_qubits) + _ring(n_qubits) + _layer("RY", n_qubits)
    return [Gate(k, t, c, i) for i, (k, t, c) in enumerate(layout)]


def build_block(arch, kind, n_qubits, kept=None, discarded=None) -> tuple[list[Gate], int]:
    """Gates of ``X = S F`` (F first) and the index where S starts."""
    arch = Architecture(arch)
    first = build_basic_block(kind, n_qubits, kept, discarded)
    g = len(first)
    if arch is Architecture.REPEAT:
        second = [Gate(x.kind, x.target, x.control, g + x.param_index) for x in first]
    else:
        second = [Gate(x.kind, x.target, x.control, g + i) for i, x in enumerate(reversed(first))]
    return first + second, g


def init_params(circuit: CircuitSpec, scheme, rng_seed=None, rng=None) -> np.ndarray:
    """F angles ~ U(-pi, pi); S angles random, copied, or inverted per ``scheme``."""
    scheme = InitScheme(scheme)
    arch = Architecture(circuit.architecture)
    rng = np.random.default_rng(rng_seed) if rng is None else rng
    params = np.empty(circuit.param_count)
    for b in circuit.blocks:
        half = b.mid - b.start
        f = rng.uniform(-np.pi, np.pi, size=half)
        if scheme is InitScheme.RANDOM:
            s = rng.uniform(-np.pi, np.pi, size=b.stop - b.mid)
        elif arch is Architecture.REPEAT:
            s = f.copy()
        else:
            s = -f[::-1]
        params[b.start : b.mid] = f
        params[b.mid : b.stop] = s
    return params


def build_circuit(n_blocks, kind, arch, scheme, n_qubits, kept=None, discarded=None, rng_seed=None, rng=None):
    """Chain ``n_blocks`` identical-architecture blocks and initialise their angles."""
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    gates: list[Gate] = []
    blocks = []
    for _ in range(n_blocks):
        block, half = build_block(arch, kind, n_qubits, kept, discarded)
        start = len(gates)
        gates += [Gate(g.kind, g.target, g.control, start + g.param_index) for g in block]
        blocks.append(BlockBoundary(start, start + half, len(gates)))
    circuit = CircuitSpec(n_qubits, tuple(gates), tuple(blocks), Architecture(arch))
    return circuit, init_params(circuit, scheme, rng_seed=rng_seed, rng=rng)


def params_per_block(kind, n_qubits: int, n_discard: int) -> int:
    kind = BlockKind(kind)
    per_basic = {
        BlockKind.A: 2 * n_qubits,
        BlockKind.B: 2 * n_qubits + n_discard * (n_qubits - n_discard),
        BlockKind.C: 3 * n_qubits,
        BlockKind.D: 3 * n_qubits,
    }[kind]
    return 2 * per_basic


def closest_multiple(target: int, unit: int) -> int:
    """Positive k minimising |k * unit - target|, ties toward smaller k."""
    if target <= 0:
        raise ValueError("target must be positive")
    lo = max(1, target // unit)
    candidates = [lo, lo + 1]
    return min(candidates, key=lambda k: (abs(k * unit - target), k))


def match_blocks(target_param_count: int, kind, n_qubits: int, n_discard: int) -> int:
    """Block count whose parameter count is closest to ``target_param_count``."""
    return closest_multiple(target_param_count, params_per_block(kind, n_qubits, n_discard))
