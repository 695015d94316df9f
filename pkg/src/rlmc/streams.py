"""Reproducible random substreams.

Every chain owns three independent generators: ``u`` (uniform midpoint
fractions), ``xi_prime`` (midpoint noise) and ``xi`` (endpoint noise). They are
built from ``numpy.random.SeedSequence(seed, spawn_key=(stream_id,))`` with
stream ids 0, 1, 2, so each stream is fixed by the seed alone and drawing more
from one stream never shifts another.

Per-chain (or per-block) seeds come from :func:`derive_seed`, a SplitMix64 mix
of the root seed and the index. The mix is plain 64-bit integer arithmetic so
ports to other languages can reproduce the seed assignment.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1

U_STREAM = 0
XI_PRIME_STREAM = 1
XI_STREAM = 2


def splitmix64(z: int) -> int:
    """One SplitMix64 output for state ``z`` (Steele, Lea & Flood 2014)."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(root: int, *indices: int) -> int:
    """Mix a root seed with one or more nonnegative indices into a 64-bit seed."""
    s = int(root) & _MASK
    for idx in indices:
        if idx < 0:
            raise ValueError("seed indices must be nonnegative")
        s = splitmix64(s ^ splitmix64(int(idx) & _MASK))
    return s


class RngStreams:
    """The three independent substreams of one chain.

    Args:
        seed: 64-bit seed. Identical seeds give identical draws.
    """

    def __init__(self, seed: int):
        if not 0 <= int(seed) <= _MASK:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.seed = int(seed)
        self.u = self._gen(U_STREAM)
        self.xi_prime = self._gen(XI_PRIME_STREAM)
        self.xi = self._gen(XI_STREAM)

    def _gen(self, stream_id):
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(stream_id,)))
        )

    @classmethod
    def for_index(cls, root: int, *indices: int) -> "RngStreams":
        """Streams for chain/block ``indices`` under ``root``."""
        return cls(derive_seed(root, *indices))

    def draw_u(self, n):
        return self.u.random(n)

    def draw_xi_prime(self, shape):
        return self.xi_prime.standard_normal(shape)

    def draw_xi(self, shape):
        return self.xi.standard_normal(shape)

    def __repr__(self):
        return f"RngStreams(seed={self.seed})"
