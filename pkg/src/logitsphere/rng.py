"""Counter-based random number streams for reproducible experiment grids.

Every random quantity in the package is drawn from a Philox generator keyed
by a ``(master_seed, stream_id)`` pair.  Stream ids are derived from
experiment coordinates (estimator name, d, beta, n, trial index, ...) by the
fixed hash below, so the full grid is reproducible and schedule-independent:
a cell's data does not depend on which other cells ran, or in what order.

Derivation hash
---------------
``stream_id`` starts from the parent stream id and folds in each token with
the splitmix64 finalizer:

* ``str``   - UTF-8 bytes folded one at a time,
* ``int``   - value masked to 64 bits,
* ``float`` - IEEE-754 bit pattern (little-endian),

each fold being ``h = splitmix64(h XOR token_word)``.  The scheme is frozen;
changing it invalidates recorded seeds.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the splitmix64 finalizer (a 64-bit bijection)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _fold_token(h: int, token) -> int:
    if isinstance(token, str):
        for b in token.encode("utf-8"):
            h = splitmix64(h ^ b)
        return splitmix64(h ^ 0x5354)  # terminator so "ab","c" != "a","bc"
    if isinstance(token, (bool, int, np.integer)):
        return splitmix64(h ^ (int(token) & _MASK64))
    if isinstance(token, (float, np.floating)):
        (word,) = struct.unpack("<Q", struct.pack("<d", float(token)))
        return splitmix64(h ^ word)
    raise TypeError(f"cannot fold token of type {type(token).__name__} into a stream id")


@dataclass(frozen=True)
class RngSeed:
    """A (master_seed, stream_id) pair naming one independent random stream.

    Identical pairs reproduce identical sample streams bit for bit.  Use
    :meth:`derive` to split off child streams for sub-tasks.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not (0 <= int(v) <= _MASK64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def derive(self, *tokens) -> "RngSeed":
        """Child seed with a stream id folded from ``tokens`` (str/int/float)."""
        h = splitmix64(self.stream_id ^ 0xA5A5A5A5A5A5A5A5)
        for token in tokens:
            h = _fold_token(h, token)
        return RngSeed(self.master_seed, h)

    def generator(self) -> np.random.Generator:
        """Fresh Philox generator keyed by (master_seed, stream_id)."""
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))
