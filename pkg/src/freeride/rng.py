"""Counter-based random streams.

Every draw is a pure function of ``(root_seed, replica, player, arm, round, lane)``,
built by absorbing each key field into a 64-bit state with the SplitMix64
finalizer.  No generator state is carried between draws, so rewards for any
``(replica, player, round, arm)`` can be regenerated in any order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))

# distinct offsets per key field so (a, b) and (b, a) hash differently
_FIELD = {
    name: np.uint64(c)
    for name, c in (
        ("replica", 0x243F6A8885A308D3),
        ("player", 0x13198A2E03707344),
        ("round", 0xA4093822299F31D0),
        ("arm", 0x082EFA98EC4E6C89),
        ("lane", 0x452821E638D01377),
    )
}


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _absorb(state: np.ndarray, value, field: str) -> np.ndarray:
    if np.ndim(value) == 0:
        # scalar uint64 arithmetic warns on wraparound; do it in Python ints
        off = (int(value) * int(_GOLDEN) + int(_FIELD[field])) & _MASK
        return _mix(state ^ np.uint64(off))
    v = np.asarray(value, dtype=np.int64).astype(np.uint64)
    return _mix(state ^ (v * _GOLDEN + _FIELD[field]))


def absorb_lane(keys: np.ndarray, lane) -> np.ndarray:
    return _absorb(keys, lane, "lane")


def to_unit(h: np.ndarray) -> np.ndarray:
    """Map 64-bit hashes to floats in [0, 1) using the top 53 bits."""
    return (h >> _S11).astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class RandomStream:
    """Stateless keyed uniform generator.

    Arguments broadcast like numpy arrays, so a whole ``(replicas, players, arms)``
    table is one call.
    """

    root_seed: int

    def _seed_state(self) -> np.ndarray:
        return _mix(np.asarray([self.root_seed & _MASK], dtype=np.uint64))[0:1]

    def prefix(self, replica, player, arm) -> np.ndarray:
        """Hash state after absorbing (seed, replica, player, arm)."""
        h = _absorb(self._seed_state(), replica, "replica")
        h = _absorb(h, player, "player")
        return _absorb(h, arm, "arm")

    @staticmethod
    def extend(prefix: np.ndarray, round, lane=0) -> np.ndarray:
        h = _absorb(prefix, round, "round")
        # lane 0 is the primary draw and is not absorbed
        if np.ndim(lane) == 0:
            return h if int(lane) == 0 else _absorb(h, lane, "lane")
        return np.where(np.asarray(lane) == 0, h, _absorb(h, lane, "lane"))

    def uniform(self, replica, player, round, arm, lane=0) -> np.ndarray:
        """Uniform draws in [0, 1), shaped like the broadcast of the key fields."""
        shape = np.broadcast_shapes(*(np.shape(v) for v in (replica, player, round, arm, lane)))
        return to_unit(self.extend(self.prefix(replica, player, arm), round, lane)).reshape(shape)
