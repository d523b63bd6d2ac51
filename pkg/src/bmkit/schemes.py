"""Buffer-map compression schemes built on synchronized support sets.

Three schemes share one wire envelope:

* ``sbms``  - every map is shipped whole (optionally entropy-coded), no
  shared state between messages.
* ``spbms`` - the sender never re-reports a position after announcing it
  filled.  Sender and receiver both track the *support set*: the ascending
  chunk ids whose status is still unknown to the receiver.  Each payload is
  exactly the sender's current bit at each support-set location (window
  positions appended since the previous message are inserted first, and
  positions that slid below the window offset are purged on both sides).
* ``ppbms`` - additionally, positions the counterpart has announced filled
  are never reported back.  Both peers of a pair maintain one shared support
  set that every message in either direction updates.

Wire envelope (big-endian): 1-byte scheme tag, 4-byte offset, 2-byte
lbmr_seq, 2-byte cbmr_seq, 2-byte payload bit count, then the payload bits
packed most-significant-bit first and zero-padded to a byte boundary.
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from . import coders
from .bitmap import BufferMap
from .errors import DesyncError, MissingReferenceError, MonotonicityError, ProtocolError

__all__ = [
    "SupportSet",
    "CompressedBM",
    "PartialBufferMap",
    "SpbmsEncoder",
    "SpbmsDecoder",
    "PpbmsSession",
    "sbms_encode",
    "sbms_decode",
    "full_resync",
    "pack_message",
    "unpack_message",
    "unpack_stream",
    "HEADER_LEN",
]

HEADER_LEN = 11
_HEADER = struct.Struct(">BIHHH")
_SCHEME_TAGS = {"sbms": 1, "spbms": 2, "ppbms": 3}
_TAG_SCHEMES = {v: k for k, v in _SCHEME_TAGS.items()}
_RESYNC_FLAG = 0x80


# ======================================================================
# Support set
# ======================================================================

class SupportSet:
    """Ascending chunk ids not yet known to be buffered.

    Instances are immutable; every operation returns a new set, which makes
    snapshotting for the reorder archive free.
    """

    __slots__ = ("locs",)

    def __init__(self, locs=()):
        arr = np.asarray(locs, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("locations must be one-dimensional")
        if arr.size > 1 and np.any(np.diff(arr) <= 0):
            raise ValueError("locations must be strictly ascending")
        self.locs = arr

    @classmethod
    def from_range(cls, lo: int, hi: int) -> "SupportSet":
        return cls(np.arange(lo, hi, dtype=np.int64))

    def insert_range(self, lo: int, hi: int) -> "SupportSet":
        """Insert the contiguous run [lo, hi); it must lie above every
        current member (new window positions always do)."""
        if hi <= lo:
            return self
        if self.locs.size and self.locs[-1] >= lo:
            raise ValueError("inserted range must lie above existing locations")
        out = SupportSet.__new__(SupportSet)
        out.locs = np.concatenate([self.locs, np.arange(lo, hi, dtype=np.int64)])
        return out

    def purge_below(self, offset: int) -> "SupportSet":
        cut = int(np.searchsorted(self.locs, offset, side="left"))
        if cut == 0:
            return self
        out = SupportSet.__new__(SupportSet)
        out.locs = self.locs[cut:]
        return out

    def remove(self, gone) -> "SupportSet":
        gone = np.asarray(gone, dtype=np.int64)
        if gone.size == 0:
            return self
        mask = np.isin(self.locs, gone, assume_unique=True, invert=True)
        out = SupportSet.__new__(SupportSet)
        out.locs = self.locs[mask]
        return out

    def __len__(self):
        return int(self.locs.size)

    def __contains__(self, loc):
        i = int(np.searchsorted(self.locs, loc))
        return i < self.locs.size and self.locs[i] == loc

    def __eq__(self, other):
        return isinstance(other, SupportSet) and np.array_equal(self.locs, other.locs)

    def __iter__(self):
        return iter(int(x) for x in self.locs)

    def __repr__(self):
        return f"SupportSet({self.locs.tolist()!r})"


def _advance(ss: SupportSet, window_end, offset: int, cover_end: int):
    """Insert newly covered window positions and purge expired ones.

    ``window_end`` is the highest chunk id (exclusive) any earlier message
    covered, or None before the first message.
    """
    lo = offset if window_end is None else max(window_end, offset)
    ss = ss.insert_range(lo, cover_end)
    ss = ss.purge_below(offset)
    new_end = cover_end if window_end is None else max(window_end, cover_end)
    return ss, new_end


# ======================================================================
# Messages
# ======================================================================

@dataclass(frozen=True)
class CompressedBM:
    """One buffer-map message as it travels on the wire."""

    scheme: str
    offset: int
    lbmr_seq: int
    cbmr_seq: int
    payload: np.ndarray  # bool bits
    resync: bool = False

    def __post_init__(self):
        if self.scheme not in _SCHEME_TAGS:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        bits = np.asarray(self.payload, dtype=bool)
        object.__setattr__(self, "payload", bits)

    @property
    def n_bits(self) -> int:
        return int(self.payload.size)

    def __eq__(self, other):
        return (
            isinstance(other, CompressedBM)
            and self.scheme == other.scheme
            and self.offset == other.offset
            and self.lbmr_seq == other.lbmr_seq
            and self.cbmr_seq == other.cbmr_seq
            and self.resync == other.resync
            and np.array_equal(self.payload, other.payload)
        )


@dataclass(frozen=True)
class PartialBufferMap:
    """Statuses decoded from one ppbms message: exactly the reported
    locations, nothing else."""

    offset: int
    locations: np.ndarray
    bits: np.ndarray

    @property
    def pairs(self):
        return [(int(l), int(b)) for l, b in zip(self.locations, self.bits)]

    def filled(self) -> np.ndarray:
        """Chunk ids this message announced as buffered."""
        return self.locations[np.asarray(self.bits, dtype=bool)]


def pack_message(msg: CompressedBM) -> bytes:
    if not 0 <= msg.offset < 2**32:
        raise ValueError("offset must fit in 4 bytes")
    if not (0 <= msg.lbmr_seq < 2**16 and 0 <= msg.cbmr_seq < 2**16):
        raise ValueError("sequence counters must fit in 2 bytes")
    if msg.n_bits >= 2**16:
        raise ValueError("payload too long for the 2-byte bit count")
    tag = _SCHEME_TAGS[msg.scheme] | (_RESYNC_FLAG if msg.resync else 0)
    head = _HEADER.pack(tag, msg.offset, msg.lbmr_seq, msg.cbmr_seq, msg.n_bits)
    body = np.packbits(msg.payload).tobytes()
    return head + body


def unpack_message(data: bytes, pos: int = 0):
    """Decode one message starting at ``pos``; returns (message, next_pos)."""
    if len(data) - pos < HEADER_LEN:
        raise ValueError("truncated message header")
    tag, offset, lbmr, cbmr, nbits = _HEADER.unpack_from(data, pos)
    scheme = _TAG_SCHEMES.get(tag & ~_RESYNC_FLAG)
    if scheme is None:
        raise ValueError(f"unknown scheme tag 0x{tag:02x}")
    nbytes = (nbits + 7) // 8
    end = pos + HEADER_LEN + nbytes
    if len(data) < end:
        raise ValueError("truncated message payload")
    raw = np.frombuffer(data[pos + HEADER_LEN : end], dtype=np.uint8)
    bits = np.unpackbits(raw)[:nbits].astype(bool)
    msg = CompressedBM(scheme, offset, lbmr, cbmr, bits, resync=bool(tag & _RESYNC_FLAG))
    return msg, end


def unpack_stream(data: bytes):
    pos = 0
    out = []
    while pos < len(data):
        msg, pos = unpack_message(data, pos)
        out.append(msg)
    return out


# ======================================================================
# SBMS: stateless whole-map shipping
# ======================================================================

def sbms_encode(bm: BufferMap, coder=None, *, seq: int = 0) -> CompressedBM:
    """Wrap a whole buffer map, optionally through a generic entropy coder."""
    if coder is None:
        bits = bm.bits
    else:
        blob = coders.encode_bits(coder, bm.bits)
        bits = np.unpackbits(np.frombuffer(blob, dtype=np.uint8)).astype(bool)
    return CompressedBM("sbms", bm.offset, seq, 0, bits)


def sbms_decode(msg: CompressedBM, n: int, coder=None) -> BufferMap:
    if msg.scheme != "sbms":
        raise ProtocolError(f"expected an sbms message, got {msg.scheme}")
    if coder is None:
        if msg.n_bits != n:
            raise DesyncError(f"expected {n} raw bits, got {msg.n_bits}")
        return BufferMap(msg.offset, msg.payload)
    blob = np.packbits(msg.payload).tobytes()
    bits = coders.decode_bits(coder, blob, n)
    return BufferMap(msg.offset, bits)


# ======================================================================
# SPBMS: per-sender support set
# ======================================================================

class _SpbmsState:
    def __init__(self, n: int):
        if not 0 < n < 2**16:
            raise ValueError("window width must fit in the wire bit count")
        self.n = n
        self.ss = SupportSet()
        self.window_end = None
        self.last_offset = 0
        self.seq = 0

    @property
    def support_set(self) -> SupportSet:
        return self.ss

    def _reset(self):
        self.ss = SupportSet()
        self.window_end = None
        self.last_offset = 0
        self.seq = 0


class SpbmsEncoder(_SpbmsState):
    """Sender half of a one-direction spbms stream."""

    def __init__(self, n: int):
        super().__init__(n)
        self.last_bm = None
        #: Locations reported by the most recent message, for diagnostics.
        self.last_locations = None

    def _check_input(self, bm: BufferMap):
        if bm.n != self.n:
            raise ProtocolError(f"bitmap width {bm.n} != codec width {self.n}")
        if self.window_end is not None and bm.offset < self.last_offset:
            raise ProtocolError(
                f"offset regressed from {self.last_offset} to {bm.offset}"
            )
        if self.last_bm is not None:
            try:
                from .bitmap import diff_new_fills

                diff_new_fills(self.last_bm, bm)
            except MonotonicityError as exc:
                raise ProtocolError(f"non-monotone bitmap: {exc}") from exc

    def encode(self, bm: BufferMap) -> CompressedBM:
        """Emit the bits at every live support-set location of ``bm``.

        Newly appended window positions join the support set first, so the
        payload is ordered purely by location; locations reported 1 leave
        the set afterwards.  The first message ever has the whole window
        appended and therefore carries the full bitmap.
        """
        self._check_input(bm)
        ss, window_end = _advance(self.ss, self.window_end, bm.offset, bm.end)
        locs = ss.locs
        payload = bm.bits[locs - bm.offset]
        self.ss = ss.remove(locs[payload])
        self.window_end = window_end
        self.last_offset = bm.offset
        self.last_bm = bm
        self.last_locations = locs
        msg = CompressedBM("spbms", bm.offset, self.seq, 0, payload)
        self.seq += 1
        return msg

    def make_resync(self, bm: BufferMap) -> CompressedBM:
        """Restart the stream: emit the whole bitmap and reset state, so the
        pair behaves exactly like a fresh bootstrap."""
        self._reset()
        self.last_bm = None
        msg = self.encode(bm)
        return CompressedBM(
            msg.scheme, msg.offset, msg.lbmr_seq, msg.cbmr_seq, msg.payload, resync=True
        )


class SpbmsDecoder(_SpbmsState):
    """Receiver half; reconstructs each full bitmap and mirrors the
    encoder's support-set updates."""

    def decode(self, msg: CompressedBM) -> BufferMap:
        if msg.scheme != "spbms":
            raise ProtocolError(f"expected an spbms message, got {msg.scheme}")
        if msg.resync:
            self._reset()
        elif msg.lbmr_seq != self.seq:
            raise MissingReferenceError(
                f"expected sequence {self.seq}, got {msg.lbmr_seq}",
                ahead=msg.lbmr_seq > self.seq,
            )
        if self.window_end is not None and msg.offset < self.last_offset:
            raise ProtocolError(
                f"offset regressed from {self.last_offset} to {msg.offset}"
            )
        # Stage every update; commit only after validation so a desynced
        # message leaves the state untouched.
        ss, window_end = _advance(self.ss, self.window_end, msg.offset, msg.offset + self.n)
        if msg.n_bits != len(ss):
            raise DesyncError(
                f"payload carries {msg.n_bits} bits but the support set implies {len(ss)}"
            )
        bits = np.ones(self.n, dtype=bool)
        bits[ss.locs - msg.offset] = msg.payload
        self.ss = ss.remove(ss.locs[msg.payload])
        self.window_end = window_end
        self.last_offset = msg.offset
        self.seq = msg.lbmr_seq + 1
        return BufferMap(msg.offset, bits)


# ======================================================================
# PPBMS: shared support set per peer pair
# ======================================================================

@dataclass
class _MsgEffect:
    """What applying a decoded message to any older state does."""

    offset: int
    cover_end: int
    ones: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


class PpbmsSession:
    """One peer's end of a ppbms pairing.

    Both ends run the same state machine over the same message sequence
    (sends and receives alike mutate the shared support set), which keeps
    the two support sets identical after every delivered message.

    Messages are stamped with (lbmr_seq, cbmr_seq) = (messages this end has
    sent, messages it has received) so a receiver can tell exactly which
    state a message was encoded against.  Recent states are archived, and
    recently applied messages are kept as replayable effects, so a message
    arriving late can still be decoded against the state it references.
    """

    def __init__(self, n: int, *, archive_depth: int = 8):
        if not 0 < n < 2**16:
            raise ValueError("window width must fit in the wire bit count")
        if archive_depth < 1:
            raise ValueError("archive depth must be at least 1")
        self.n = n
        self.archive_depth = archive_depth
        self.ss = SupportSet()
        self.window_end = None
        self.sent_seq = 0
        self.recv_seq = 0
        self.last_sent_offset = 0
        self.last_recv_offset = 0
        self.last_bm = None
        self.last_locations = None
        self._archive = OrderedDict()  # (sent, recv) -> (ss, window_end)
        self._sent_log = OrderedDict()  # own message index -> _MsgEffect
        self._recv_log = OrderedDict()  # counterpart message index -> _MsgEffect
        self._remember_state()

    # -- state bookkeeping -------------------------------------------------

    @property
    def support_set(self) -> SupportSet:
        return self.ss

    def _remember_state(self):
        self._archive[(self.sent_seq, self.recv_seq)] = (self.ss, self.window_end)
        while len(self._archive) > 2 * self.archive_depth + 1:
            self._archive.popitem(last=False)

    def _log(self, log: OrderedDict, idx: int, effect: _MsgEffect):
        log[idx] = effect
        while len(log) > self.archive_depth:
            log.popitem(last=False)

    def _apply_effect(self, ss, window_end, eff: _MsgEffect):
        ss, window_end = _advance(ss, window_end, eff.offset, eff.cover_end)
        return ss.remove(eff.ones[np.isin(eff.ones, ss.locs, assume_unique=True)]), window_end

    def _resolve(self, sent: int, recv: int):
        """Support-set state after ``sent`` own and ``recv`` counterpart
        messages, rebuilt from the archive plus replay logs if needed."""
        if (sent, recv) == (self.sent_seq, self.recv_seq):
            return self.ss, self.window_end
        hit = self._archive.get((sent, recv))
        if hit is not None:
            return hit
        ahead = recv > self.recv_seq or sent > self.sent_seq
        for (s0, r0), (ss, we) in reversed(self._archive.items()):
            if s0 > sent or r0 > recv:
                continue
            if all(i in self._sent_log for i in range(s0, sent)) and all(
                i in self._recv_log for i in range(r0, recv)
            ):
                effects = [self._sent_log[i] for i in range(s0, sent)]
                effects += [self._recv_log[i] for i in range(r0, recv)]
                effects.sort(key=lambda e: e.offset)
                for eff in effects:
                    ss, we = self._apply_effect(ss, we, eff)
                return ss, we
        raise MissingReferenceError(
            f"no support-set snapshot for (sent={sent}, recv={recv}); "
            f"live state is (sent={self.sent_seq}, recv={self.recv_seq})",
            ahead=ahead,
        )

    def archive_and_resolve(self, lbmr_seq: int, cbmr_seq: int) -> SupportSet:
        """Support set an incoming message stamped (lbmr_seq, cbmr_seq) was
        encoded against.  In-order traffic resolves to the live set; a
        delayed message resolves to an archived or replayed snapshot.
        Raises MissingReferenceError when the snapshot is gone (too old) or
        not yet constructible (message from the future; ``ahead`` is set)."""
        return self._resolve(cbmr_seq, lbmr_seq)[0]

    def _reset_epoch(self):
        self.ss = SupportSet()
        self.window_end = None
        self.sent_seq = 0
        self.recv_seq = 0
        self.last_sent_offset = 0
        self.last_recv_offset = 0
        self._archive = OrderedDict()
        self._sent_log = OrderedDict()
        self._recv_log = OrderedDict()
        self._remember_state()

    # -- protocol ----------------------------------------------------------

    def encode(self, bm: BufferMap) -> CompressedBM:
        """Report own bits at every live shared-support-set location."""
        if bm.n != self.n:
            raise ProtocolError(f"bitmap width {bm.n} != session width {self.n}")
        if self.window_end is not None and bm.offset < self.last_sent_offset:
            raise ProtocolError(
                f"offset regressed from {self.last_sent_offset} to {bm.offset}"
            )
        if self.last_bm is not None:
            try:
                from .bitmap import diff_new_fills

                diff_new_fills(self.last_bm, bm)
            except MonotonicityError as exc:
                raise ProtocolError(f"non-monotone bitmap: {exc}") from exc
        ss, window_end = _advance(self.ss, self.window_end, bm.offset, bm.end)
        locs = ss.locs
        payload = bm.bits[locs - bm.offset]
        msg = CompressedBM("ppbms", bm.offset, self.sent_seq, self.recv_seq, payload)
        self.ss = ss.remove(locs[payload])
        self.window_end = window_end
        self.last_sent_offset = bm.offset
        self.last_bm = bm
        self.last_locations = locs
        self._log(self._sent_log, self.sent_seq, _MsgEffect(bm.offset, bm.end, locs[payload]))
        self.sent_seq += 1
        self._remember_state()
        return msg

    def decode(self, msg: CompressedBM) -> PartialBufferMap:
        if msg.scheme != "ppbms":
            raise ProtocolError(f"expected a ppbms message, got {msg.scheme}")
        if msg.resync:
            self._reset_epoch()
        ss, we = self._resolve(msg.cbmr_seq, msg.lbmr_seq)
        if msg.lbmr_seq != self.recv_seq:
            raise MissingReferenceError(
                f"expected counterpart message {self.recv_seq}, got {msg.lbmr_seq}",
                ahead=msg.lbmr_seq > self.recv_seq,
            )
        staged, _ = _advance(ss, we, msg.offset, msg.offset + self.n)
        if msg.n_bits != len(staged):
            raise DesyncError(
                f"payload carries {msg.n_bits} bits but the support set implies {len(staged)}"
            )
        locs = staged.locs
        ones = locs[msg.payload]
        # Merge into the live state.  The live set may already be further
        # along (it advances on our own sends too); appends and purges the
        # message implies are subsumed, removals are idempotent.
        live_ss, live_we = _advance(
            self.ss, self.window_end, msg.offset, msg.offset + self.n
        )
        self.ss = live_ss.remove(ones[np.isin(ones, live_ss.locs, assume_unique=True)])
        self.window_end = live_we
        self.last_recv_offset = msg.offset
        self._log(self._recv_log, msg.lbmr_seq, _MsgEffect(msg.offset, msg.offset + self.n, ones))
        self.recv_seq = msg.lbmr_seq + 1
        self._remember_state()
        return PartialBufferMap(msg.offset, locs, np.asarray(msg.payload, dtype=bool))

    def apply_sent(self, msg: CompressedBM) -> PartialBufferMap:
        """Replay one of this peer's own transmitted messages.

        Rebuilding a session from a message log (crash recovery, or an
        observer reconstructing a wiretapped exchange) needs both halves
        of the state transition: ``decode`` covers the counterpart's
        messages, this covers the peer's own.  It advances the shared
        support set exactly as ``encode`` did when the message was first
        produced, driven by the wire message instead of a bitmap.
        Messages must be replayed in their original send order.
        """
        if msg.scheme != "ppbms":
            raise ProtocolError(f"expected a ppbms message, got {msg.scheme}")
        if msg.resync:
            self._reset_epoch()
        if msg.lbmr_seq != self.sent_seq:
            raise MissingReferenceError(
                f"expected own message {self.sent_seq}, got {msg.lbmr_seq}",
                ahead=msg.lbmr_seq > self.sent_seq,
            )
        if msg.cbmr_seq != self.recv_seq:
            raise DesyncError(
                f"own message {msg.lbmr_seq} was stamped after {msg.cbmr_seq} received"
                f" messages, but this replica has processed {self.recv_seq}"
            )
        if self.window_end is not None and msg.offset < self.last_sent_offset:
            raise ProtocolError(
                f"offset regressed from {self.last_sent_offset} to {msg.offset}"
            )
        ss, window_end = _advance(self.ss, self.window_end, msg.offset, msg.offset + self.n)
        if msg.n_bits != len(ss):
            raise DesyncError(
                f"payload carries {msg.n_bits} bits but the support set implies {len(ss)}"
            )
        locs = ss.locs
        payload = np.asarray(msg.payload, dtype=bool)
        self.ss = ss.remove(locs[payload])
        self.window_end = window_end
        self.last_sent_offset = msg.offset
        self.last_bm = None  # the replica never sees the full bitmap
        self.last_locations = locs
        self._log(self._sent_log, self.sent_seq, _MsgEffect(msg.offset, msg.offset + self.n, locs[payload]))
        self.sent_seq += 1
        self._remember_state()
        return PartialBufferMap(msg.offset, locs, payload)

    def make_resync(self, bm: BufferMap) -> CompressedBM:
        """Restart the pairing from scratch: ship the whole bitmap; both
        ends rebuild the shared support set from it alone."""
        self._reset_epoch()
        self.last_bm = None
        msg = self.encode(bm)
        return CompressedBM(
            msg.scheme, msg.offset, msg.lbmr_seq, msg.cbmr_seq, msg.payload, resync=True
        )


def full_resync(session, bm: BufferMap | None = None) -> CompressedBM:
    """Emit a whole-bitmap restart message for an SpbmsEncoder or a
    PpbmsSession, defaulting to the sender's most recent own bitmap."""
    if bm is None:
        bm = session.last_bm
        if bm is None:
            raise ProtocolError("nothing sent yet, so there is no bitmap to resync from")
    return session.make_resync(bm)
