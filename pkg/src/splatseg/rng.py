"""Deterministic random number generation for every seeded component.

The generator is a counter-based SplitMix64.  Output ``i`` (0-based) of a
stream seeded with ``s`` is ``mix64(s + (i + 1) * 0x9E3779B97F4A7C15)``
where ``mix64`` is the standard finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

with all arithmetic modulo 2**64.  Deriving each output from a counter
instead of chained state keeps fixtures byte-identical across languages
and lets a block of any size be drawn without disturbing later draws.

Derived quantities are defined on top of the raw uint64 stream:

* ``uniform``:  ``(u >> 11) * 2.0**-53``, in ``[0, 1)``, then affinely
  mapped to ``[lo, hi)``.
* ``integers``: ``lo + floor(unit * (hi - lo))``, in ``[lo, hi)``.
* ``normal``:   Box-Muller over consecutive pairs of open-interval
  uniforms ``((u >> 12) + 0.5) * 2.0**-52``; pair ``(a, b)`` yields
  ``r*cos(theta)`` then ``r*sin(theta)`` with ``r = sqrt(-2 ln a)`` and
  ``theta = 2 pi b``.  An odd-length request discards the trailing half
  of its final pair; nothing is carried over between calls.

Any port that reproduces these rules reproduces every fixture in this
package bit for bit.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def mix64(z: NDArray[np.uint64]) -> NDArray[np.uint64]:
    """SplitMix64 finalizer, vectorized over uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= _MIX1
        z ^= z >> np.uint64(27)
        z *= _MIX2
        z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    """Counter-based SplitMix64 stream.

    Parameters
    ----------
    seed : int
        Stream seed; reduced modulo 2**64.
    """

    def __init__(self, seed: int) -> None:
        self._seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self._counter = 0

    @property
    def counter(self) -> int:
        """Number of raw uint64 outputs consumed so far."""
        return self._counter

    def next_uint64(self, n: int) -> NDArray[np.uint64]:
        """Draw the next ``n`` raw outputs as a uint64 array."""
        if n < 0:
            raise ValueError("n must be non-negative")
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            state = self._seed + idx * _GOLDEN
        return mix64(state)

    def uniform(self, n: int | None = None, lo: float = 0.0, hi: float = 1.0):
        """Uniform doubles in ``[lo, hi)``; scalar when ``n`` is None."""
        m = 1 if n is None else int(n)
        u = (self.next_uint64(m) >> np.uint64(11)) * 2.0**-53
        out = lo + u * (hi - lo)
        return float(out[0]) if n is None else out

    def integers(self, lo: int, hi: int, n: int | None = None):
        """Uniform integers in ``[lo, hi)``; scalar when ``n`` is None."""
        if hi <= lo:
            raise ValueError("require hi > lo")
        m = 1 if n is None else int(n)
        u = (self.next_uint64(m) >> np.uint64(11)) * 2.0**-53
        out = lo + np.floor(u * (hi - lo)).astype(np.int64)
        out = np.minimum(out, hi - 1)  # guard against rounding at the top edge
        return int(out[0]) if n is None else out

    def normal(self, n: int | None = None):
        """Standard normal deviates via Box-Muller; scalar when ``n`` is None."""
        m = 1 if n is None else int(n)
        pairs = (m + 1) // 2
        raw = self.next_uint64(2 * pairs)
        u = ((raw >> np.uint64(12)) + 0.5) * 2.0**-52  # open interval (0, 1)
        a = u[0::2]
        b = u[1::2]
        r = np.sqrt(-2.0 * np.log(a))
        theta = 2.0 * np.pi * b
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        out = out[:m]
        return float(out[0]) if n is None else out
