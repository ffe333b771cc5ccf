"""Counter-based random number streams for reproducible ensemble Monte Carlo.

Every random draw in the simulator is addressed by the triple
``(seed, stream_index, draw_counter)`` and produced by a stateless 64-bit
mixing function (the splitmix64 finalizer applied to a Weyl sequence).
Each atom owns its own stream, so the numbers an atom sees depend only on
the seed, its index, and how many draws it has consumed -- never on the
order in which atoms are updated or on how an ensemble is partitioned
across workers.

All arithmetic is modulo 2**64, done on uint64 ndarrays (numpy wraps
silently on arrays, which is exactly what we want here).
"""
from __future__ import annotations

import numpy as np

__all__ = ["rng_stream", "stream_keys", "uniform_from_key", "derive_seed", "AtomStreams"]

# splitmix64 constants (Weyl increment and finalizer multipliers)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_KEY_SALT = np.uint64(0x8538ECB5BD456465)

_INV_2_53 = float(2.0 ** -53)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; x must be a uint64 ndarray (any shape)."""
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= _MIX1
    x ^= x >> np.uint64(27)
    x *= _MIX2
    x ^= x >> np.uint64(31)
    return x


def stream_keys(seed: int, stream_index) -> np.ndarray:
    """Per-stream key(s): both seed and index fully diffused into 64 bits."""
    seed_u = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    shape = np.shape(stream_index)
    idx = np.atleast_1d(np.asarray(stream_index, dtype=np.uint64))
    out = _mix64((_mix64(idx * _GOLDEN + _KEY_SALT) ^ seed_u) + _KEY_SALT)
    return out.reshape(shape)


def uniform_from_key(key, counter) -> np.ndarray:
    """Uniform [0, 1) variates for (key, counter) pairs (broadcasting)."""
    key, ctr = np.broadcast_arrays(np.asarray(key, dtype=np.uint64),
                                   np.asarray(counter, dtype=np.uint64))
    shape = key.shape
    key = np.atleast_1d(key)
    ctr = np.atleast_1d(ctr)
    z = _mix64(key + (ctr + np.uint64(1)) * _GOLDEN)
    return ((z >> np.uint64(11)).astype(np.float64) * _INV_2_53).reshape(shape)


def rng_stream(seed: int, atom_index: int, draw_counter: int) -> float:
    """The (seed, atom, counter) -> uniform [0,1) map; the single source of
    randomness for the whole simulator."""
    return float(uniform_from_key(stream_keys(seed, atom_index), draw_counter))


def derive_seed(seed: int, *indices: int) -> int:
    """Hash a base seed with grid coordinates into a decorrelated child seed."""
    key = np.atleast_1d(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    for ix in indices:
        key = _mix64((key + _GOLDEN) ^ np.uint64(int(ix) & 0xFFFFFFFFFFFFFFFF))
    return int(key[0])


class AtomStreams:
    """Bookkeeping for one stream per atom.

    Holds the per-atom keys and draw counters; drawing advances only the
    counters of the atoms that drew.  Copying the counters is enough to
    snapshot the full RNG state.
    """

    def __init__(self, seed: int, n_atoms: int):
        self.seed: int | None = int(seed)
        self.n_atoms = int(n_atoms)
        self.keys = stream_keys(seed, np.arange(n_atoms, dtype=np.uint64))
        self.counters = np.zeros(n_atoms, dtype=np.uint64)

    @classmethod
    def from_keys(cls, keys: np.ndarray) -> "AtomStreams":
        """Streams over precomputed keys (e.g. several seeds concatenated)."""
        st = cls.__new__(cls)
        st.seed = None
        st.n_atoms = keys.shape[0]
        st.keys = keys
        st.counters = np.zeros(st.n_atoms, dtype=np.uint64)
        return st

    def uniform_all(self) -> np.ndarray:
        """One uniform per atom; every counter advances by 1."""
        u = uniform_from_key(self.keys, self.counters)
        self.counters += np.uint64(1)
        return u

    def uniform_for(self, idx: np.ndarray, count: int) -> np.ndarray:
        """`count` uniforms for each atom in `idx`, shape (len(idx), count)."""
        offs = np.arange(count, dtype=np.uint64)
        u = uniform_from_key(self.keys[idx][:, None], self.counters[idx][:, None] + offs[None, :])
        self.counters[idx] += np.uint64(count)
        return u

    def skip_to(self, counter: int) -> None:
        """Advance every counter to a fixed value (init headroom)."""
        self.counters[:] = np.uint64(counter)

    def copy(self) -> "AtomStreams":
        dup = AtomStreams.__new__(AtomStreams)
        dup.seed = self.seed
        dup.n_atoms = self.n_atoms
        dup.keys = self.keys  # immutable by convention
        dup.counters = self.counters.copy()
        return dup
