"""Buffer maps and the synthetic peers that produce them.

A buffer map is a window of ``n`` bits anchored at a chunk offset:
position ``i`` describes chunk ``offset + i``, so position 0 is the oldest
chunk still in the window and position ``n - 1`` the newest.  The age of
chunk ``c`` at a given map is therefore ``offset + n - 1 - c``.
"""

from __future__ import annotations

import numpy as np

from .errors import MonotonicityError
from .fillmodel import SCurve, sample_fill_delays

__all__ = ["BufferMap", "PeerBufferState", "diff_new_fills"]

_DELAY_BATCH = 4096


class BufferMap:
    """Immutable bitmap snapshot of one peer's buffer window."""

    __slots__ = ("offset", "bits")

    def __init__(self, offset: int, bits):
        if offset < 0:
            raise ValueError("offset must be nonnegative")
        arr = np.asarray(bits, dtype=bool).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("bits must be a one-dimensional, nonempty sequence")
        arr.flags.writeable = False
        self.offset = int(offset)
        self.bits = arr

    @property
    def n(self) -> int:
        return self.bits.size

    @property
    def end(self) -> int:
        """One past the newest chunk id covered by the window."""
        return self.offset + self.bits.size

    def age_of(self, chunk_id: int) -> int:
        if not self.offset <= chunk_id < self.end:
            raise ValueError(f"chunk {chunk_id} outside window [{self.offset}, {self.end})")
        return self.offset + self.bits.size - 1 - chunk_id

    def bit_for(self, chunk_id: int) -> bool:
        if not self.offset <= chunk_id < self.end:
            raise ValueError(f"chunk {chunk_id} outside window [{self.offset}, {self.end})")
        return bool(self.bits[chunk_id - self.offset])

    def to_hex(self) -> str:
        return np.packbits(self.bits).tobytes().hex()

    @classmethod
    def from_hex(cls, offset: int, hexstr: str, n: int) -> "BufferMap":
        data = bytes.fromhex(hexstr)
        if len(data) != (n + 7) // 8:
            raise ValueError(f"hex bitmap has {len(data)} bytes, expected {(n + 7) // 8}")
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n]
        pad = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[n:]
        if pad.any():
            raise ValueError("padding bits past the window width must be zero")
        return cls(offset, bits)

    def __eq__(self, other):
        return (
            isinstance(other, BufferMap)
            and self.offset == other.offset
            and np.array_equal(self.bits, other.bits)
        )

    def __repr__(self):
        ones = int(self.bits.sum())
        return f"BufferMap(offset={self.offset}, n={self.n}, ones={ones})"


class PeerBufferState:
    """Generative peer: a sliding window over chunks whose fill delays are
    drawn once from the fill curve.

    The window advances one chunk per chunk-time; chunk ``c`` enters the
    window (at age 0) at time ``c - (base_offset + n - 1)``.  A chunk's bit is
    1 exactly when its age has reached its sampled fill delay, so bits never
    regress while a chunk stays in the window.
    """

    def __init__(self, peer_id, curve: SCurve, *, base_offset=0, rng=None, delay_fn=None):
        if base_offset < 0:
            raise ValueError("base_offset must be nonnegative")
        self.peer_id = peer_id
        self.curve = curve
        self.n = curve.n
        self.base_offset = int(base_offset)
        self._delay_fn = delay_fn
        self._rng = rng if rng is not None else np.random.default_rng()
        # Delay of chunk (base_offset + k) lives at index k; n means "never
        # fills while in the window".
        self._delays = np.empty(0, dtype=np.int64)

    def _ensure_delays(self, upto_chunk: int) -> None:
        need = upto_chunk - self.base_offset + 1
        if need <= self._delays.size:
            return
        grow = max(need - self._delays.size, _DELAY_BATCH)
        if self._delay_fn is not None:
            start = self.base_offset + self._delays.size
            fresh = np.array(
                [min(self._delay_fn(c), self.n) for c in range(start, start + grow)],
                dtype=np.int64,
            )
        else:
            fresh = sample_fill_delays(self.curve, self._rng.random(grow))
        self._delays = np.concatenate([self._delays, fresh])

    def fill_delay(self, chunk_id: int) -> int:
        if chunk_id < self.base_offset:
            raise ValueError(f"chunk {chunk_id} predates this peer's stream")
        self._ensure_delays(chunk_id)
        return int(self._delays[chunk_id - self.base_offset])

    def offset_at(self, t: int) -> int:
        return self.base_offset + t

    def snapshot(self, t: int) -> BufferMap:
        """Buffer map at time ``t`` (chunk-times since creation)."""
        if t < 0:
            raise ValueError("t must be at or after the state's creation time")
        offset = self.base_offset + t
        newest = offset + self.n - 1
        self._ensure_delays(newest)
        idx = np.arange(offset, newest + 1) - self.base_offset
        ages = np.arange(self.n - 1, -1, -1)
        bits = self._delays[idx] <= ages
        return BufferMap(offset, bits)


def diff_new_fills(prev: BufferMap, cur: BufferMap) -> set:
    """Chunk ids filled in ``cur`` that were unfilled (or absent) in ``prev``.

    Raises :class:`MonotonicityError` if any chunk present in both windows
    went from filled back to unfilled.
    """
    if cur.offset < prev.offset:
        raise ValueError("current map must not start before the previous one")
    lo = max(prev.offset, cur.offset)
    hi = min(prev.end, cur.end)
    new = set()
    if hi > lo:
        p = prev.bits[lo - prev.offset : hi - prev.offset]
        c = cur.bits[lo - cur.offset : hi - cur.offset]
        regressed = p & ~c
        if regressed.any():
            where = int(np.flatnonzero(regressed)[0]) + lo
            raise MonotonicityError(f"chunk {where} went from filled to unfilled")
        new.update((int(i) + lo for i in np.flatnonzero(~p & c)))
    # Chunks newly appended to the window.
    tail_start = max(cur.offset, prev.end)
    if cur.end > tail_start:
        tail = cur.bits[tail_start - cur.offset :]
        new.update(int(i) + tail_start for i in np.flatnonzero(tail))
    return new
