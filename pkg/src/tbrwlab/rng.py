"""Seedable 64-bit random number generation.

The generator is xoshiro256** (Blackman and Vigna), state seeded from a
single 64-bit integer through splitmix64.  Replica streams are derived
statelessly: replica i of master seed s uses output i+1 of the splitmix64
sequence started at s, which is injective in i for fixed s.

Uniform doubles are (next_u64() >> 11) * 2**-53, so every draw consumes
exactly one 64-bit output.  Bounded integers are floor(u * n) from one
uniform; the selection bias is at most n * 2**-53.

A numba twin of this generator lives in _kernels.py and must stay
bit-identical (tests compare raw streams).
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 2.0 ** -53


def splitmix64_next(state: int) -> tuple[int, int]:
    """One splitmix64 step. Returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return state, z


def derive_replica_seed(master_seed: int, replica_index: int) -> int:
    """Seed for replica `replica_index` of a run with seed `master_seed`.

    Equals output replica_index+1 of splitmix64 started at master_seed.
    Stateless, and injective in the index for a fixed master seed.
    """
    if replica_index < 0:
        raise ValueError("replica_index must be nonnegative")
    state = (master_seed + (replica_index + 1) * _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return z


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """xoshiro256** with the published update; 4x64-bit state."""

    __slots__ = ("s",)

    def __init__(self, seed: int):
        seed &= _MASK
        s = []
        st = seed
        for _ in range(4):
            st, out = splitmix64_next(st)
            s.append(out)
        self.s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform double in [0, 1), 53 significant bits."""
        return (self.next_u64() >> 11) * _INV53

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n). One draw; bias <= n * 2**-53."""
        return int(self.random() * n)

    def state_copy(self) -> tuple[int, int, int, int]:
        return tuple(self.s)

    @classmethod
    def from_state(cls, state) -> "Xoshiro256StarStar":
        obj = cls.__new__(cls)
        obj.s = [int(x) & _MASK for x in state]
        return obj
