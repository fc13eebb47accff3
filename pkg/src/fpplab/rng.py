"""Counter-based random streams keyed by (master seed, replica, label)."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_U64 = (1 << 64) - 1


def _label_word(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngSeed:
    """A reproducible stream: identical triples give bit-identical draws.

    Streams are Philox generators whose 128-bit key is derived from the
    triple, so distinct replicas or labels never share a counter space.
    """

    seed: int
    replica: int = 0
    label: str = ""

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) <= _U64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.replica < 0:
            raise ValueError(f"replica must be >= 0, got {self.replica}")

    def key(self) -> np.ndarray:
        ss = np.random.SeedSequence([int(self.seed), int(self.replica), _label_word(self.label)])
        return ss.generate_state(2, np.uint64)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key()))

    def child(self, label: str) -> "RngSeed":
        """Sub-stream of the same replica (e.g. field vs. colours)."""
        return RngSeed(self.seed, self.replica, f"{self.label}/{label}" if self.label else label)

    def with_replica(self, replica: int) -> "RngSeed":
        return RngSeed(self.seed, replica, self.label)

    def mix64(self) -> np.uint64:
        """A single 64-bit word summarising the stream, for hashing."""
        return self.key()[0] ^ self.key()[1]

    def __str__(self) -> str:
        return f"{self.seed}:{self.replica}:{self.label}"


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorised splitmix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(x, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):
        z += np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def hash_uniforms(points: np.ndarray, seed: RngSeed, salt: str = "") -> np.ndarray:
    """Uniforms in [0, 1) that depend only on each point's coordinates and the seed.

    Two clouds sharing a point (e.g. after thinning) give that point the
    same uniform, which is what makes parameter couplings monotone.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    bits = pts.view(np.uint64)
    h = np.full(pts.shape[0], seed.mix64() ^ np.uint64(_label_word(salt)), dtype=np.uint64)
    for j in range(pts.shape[1]):
        h = splitmix64(h ^ bits[:, j])
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
