"""Two-peer exchange simulator.

One engine drives every selected scheme over one shared sequence of buffer
snapshots on the standard schedule: peer B sends at ``i*T``, peer A answers
at ``i*T + tau``.  Each message is encoded, optionally entropy-coded,
delivered (immediately, delayed, swapped, or dropped per an optional
reorder script), decoded, and checked:

* spbms: the decoder's reconstruction must equal the sender's snapshot
  bit-for-bit, and the two support sets must match whenever no message is
  in flight.
* ppbms: every reported (location, bit) pair must match the sender's
  snapshot, and the two shared support sets must match whenever the pair
  is drained.

Alongside byte counts the engine measures each message's *ideal code
length*: minus log2 of the payload's probability under the true generative
model.  A support-set location the sender had already reported (it lies
below the sender's previous window end) carries a bit distributed as the
conditional fill probability q_{age-T, age}; a location newly covered since
then carries a fresh p_age bit.  Averaged over messages, these lengths are
exactly the per-message information quantities the entropy module computes,
which is what the formula-validation tests exploit.

Message loss is the designed recovery path, not an error: a receiver that
can no longer resolve references (archive eviction or an overflowing hold
buffer) flags its pairing, the next sender answers with a whole-bitmap
resync message, and stale traffic from before the resync is discarded via
an engine-level epoch stamp on each delivery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import traceio
from .bitmap import PeerBufferState
from .coders import CODER_NAMES, encode_bits
from .entropy import ExchangeParams
from .errors import InvariantError, MissingReferenceError
from .fillmodel import SCurve
from .schemes import PpbmsSession, SpbmsDecoder, SpbmsEncoder, sbms_decode, sbms_encode

__all__ = [
    "SCHEMES",
    "SimConfig",
    "ReorderScript",
    "SchemeDirStats",
    "SimResult",
    "run_synthetic",
    "run_trace",
    "reorder_fault_run",
]

SCHEMES = ("sbms", "spbms", "ppbms")
_DIRS = ("ab", "ba")
_SENDER = {"ab": "A", "ba": "B"}
_RECEIVER = {"ab": "B", "ba": "A"}


@dataclass(frozen=True)
class SimConfig:
    """Parameters of a synthetic run; ``seed`` fixes all randomness."""

    curve: SCurve
    T: int
    tau: int
    rounds: int
    seed: int = 0
    schemes: tuple = SCHEMES
    coders: tuple = ()
    offset_lag: int = 0
    warmup: int | None = None  # periods before measuring; None = window fill + 1
    archive_depth: int = 8
    keep_messages: bool = False

    def __post_init__(self):
        ExchangeParams(self.T, self.tau, self.curve.n)
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "coders", tuple(self.coders))
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ValueError(f"schemes must be a nonempty subset of {SCHEMES}")
        bad = [c for c in self.coders if c not in CODER_NAMES]
        if bad:
            raise ValueError(f"unknown coders {bad}; choose from {CODER_NAMES}")
        if self.offset_lag < 0:
            raise ValueError("offset_lag must be nonnegative")
        if self.warmup is not None and self.warmup < 0:
            raise ValueError("warmup must be nonnegative")

    @property
    def n(self) -> int:
        return self.curve.n

    @property
    def warmup_periods(self) -> int:
        if self.warmup is not None:
            return self.warmup
        return math.ceil(self.n / self.T) + 1


@dataclass(frozen=True)
class ReorderScript:
    """Delivery faults keyed by (direction, per-direction message index).

    ``drops`` lose the message; ``swaps`` invert messages idx and idx+1 of
    one direction; ``delays`` hold a message for that many delivery slots.
    A dropped index wins over a swap or delay on the same message.
    """

    delays: dict = field(default_factory=dict)
    drops: frozenset = field(default_factory=frozenset)
    swaps: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(
            self, "delays", {(d, int(i)): int(v) for (d, i), v in dict(self.delays).items()}
        )
        object.__setattr__(self, "drops", frozenset((d, int(i)) for d, i in self.drops))
        object.__setattr__(self, "swaps", frozenset((d, int(i)) for d, i in self.swaps))
        for (d, i), v in self.delays.items():
            if d not in _DIRS or i < 0 or v < 0:
                raise ValueError(f"bad delay entry ({d!r}, {i}) -> {v}")
        for d, i in self.drops | self.swaps:
            if d not in _DIRS or i < 0:
                raise ValueError(f"bad message key ({d!r}, {i})")


@dataclass(frozen=True)
class SchemeDirStats:
    scheme: str
    direction: str
    messages: int
    mean_payload_bits: float
    std_payload_bits: float
    mean_ideal_bits: float
    mean_ss_size: float
    resyncs: int
    drops: int
    coder_bytes: dict


@dataclass(frozen=True)
class SimResult:
    """Measured sizes and diagnostics of one run; ``to_csv`` is stable
    byte-for-byte for a fixed config and seed."""

    n: int
    T: int
    tau: int
    rounds: int
    seed: int
    source: str
    schemes: tuple
    coders: tuple
    stats: tuple
    payloads: dict
    ss_sizes: dict
    ideal_bits: dict
    decoded: dict

    def row(self, scheme: str, direction: str) -> SchemeDirStats:
        for s in self.stats:
            if s.scheme == scheme and s.direction == direction:
                return s
        raise KeyError(f"no stats for ({scheme}, {direction})")

    def mean_ideal(self, scheme: str) -> float:
        """Mean ideal code length per message, both directions pooled."""
        chunks = [self.ideal_bits[(scheme, d)] for d in _DIRS if (scheme, d) in self.ideal_bits]
        pooled = np.concatenate([c for c in chunks if c.size]) if chunks else np.empty(0)
        if pooled.size == 0:
            raise ValueError(f"no measured messages for {scheme}")
        return float(pooled.mean())

    def concat_payload(self, scheme: str) -> np.ndarray:
        """All measured payload bits of a scheme, direction-major (every
        ab payload in send order, then every ba payload)."""
        parts = []
        for d in _DIRS:
            parts.extend(self.payloads.get((scheme, d), []))
        if not parts:
            return np.empty(0, dtype=bool)
        return np.concatenate(parts)

    def total_resyncs(self, scheme: str) -> int:
        return max(s.resyncs for s in self.stats if s.scheme == scheme)

    def to_csv(self) -> str:
        cols = [
            "scheme",
            "direction",
            "messages",
            "mean_payload_bits",
            "std_payload_bits",
            "mean_ideal_bits",
            "mean_ss_size",
            "resyncs",
            "drops",
        ] + [f"{c}_bytes" for c in self.coders]
        lines = [
            f"# n={self.n} T={self.T} tau={self.tau} rounds={self.rounds}"
            f" seed={self.seed} source={self.source}",
            ",".join(cols),
        ]
        for s in self.stats:
            row = [
                s.scheme,
                s.direction,
                str(s.messages),
                f"{s.mean_payload_bits:.6f}",
                f"{s.std_payload_bits:.6f}",
                f"{s.mean_ideal_bits:.6f}",
                f"{s.mean_ss_size:.6f}",
                str(s.resyncs),
                str(s.drops),
            ] + [str(s.coder_bytes.get(c, 0)) for c in self.coders]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


class _Acc:
    def __init__(self, coders):
        self.messages = 0
        self.payload_bits = []
        self.ideal = []
        self.ss = []
        self.payloads = []
        self.decoded = []
        self.coder_bytes = {c: 0 for c in coders}
        self.drops = 0

    def stats(self, scheme, direction, resyncs) -> SchemeDirStats:
        pb = np.asarray(self.payload_bits, dtype=np.float64)
        ideal = np.asarray(self.ideal, dtype=np.float64)
        ss = np.asarray(self.ss, dtype=np.float64)
        return SchemeDirStats(
            scheme,
            direction,
            self.messages,
            float(pb.mean()) if pb.size else float("nan"),
            float(pb.std()) if pb.size else float("nan"),
            float(ideal.mean()) if ideal.size and not np.isnan(ideal).any() else float("nan"),
            float(ss.mean()) if ss.size else float("nan"),
            resyncs,
            self.drops,
            dict(self.coder_bytes),
        )


def _ideal_bits(curve: SCurve, offset: int, locs: np.ndarray, bits: np.ndarray,
                prev_end, period: int, fresh_all: bool) -> float:
    """Minus log2 probability of a payload under the true fill model."""
    if locs.size == 0:
        return 0.0
    n = curve.n
    ages = offset + n - 1 - locs
    model = curve.probs[ages].copy()
    if not fresh_all and prev_end is not None:
        old = locs < prev_end
        if old.any():
            prev_p = curve.probs[ages[old] - period]
            left = 1.0 - prev_p
            if np.any(left <= 0.0):
                raise InvariantError(
                    "a support-set location was certainly filled at its previous report"
                )
            model[old] = (model[old] - prev_p) / left
    cost = np.where(bits, model, 1.0 - model)
    if np.any(cost <= 0.0):
        raise InvariantError("payload contains a zero-probability bit under the true model")
    return float(-np.log2(cost).sum())


@dataclass
class _Envelope:
    due: float
    counter: int
    scheme: str
    direction: str
    epoch: int
    msg: object
    snap: object
    idx: int


class _Engine:
    """Shared machinery for synthetic and fault-injection runs."""

    def __init__(self, cfg: SimConfig, script: ReorderScript | None):
        self.cfg = cfg
        self.script = script or ReorderScript()
        n = cfg.n
        seq_b, seq_a = np.random.SeedSequence(cfg.seed).spawn(2)
        self.peers = {
            "B": PeerBufferState("B", cfg.curve, rng=np.random.default_rng(seq_b)),
            "A": PeerBufferState(
                "A", cfg.curve, base_offset=cfg.offset_lag, rng=np.random.default_rng(seq_a)
            ),
        }
        self.spbms_enc = {d: SpbmsEncoder(n) for d in _DIRS}
        self.spbms_dec = {d: SpbmsDecoder(n) for d in _DIRS}
        self.ppbms = {
            p: PpbmsSession(n, archive_depth=cfg.archive_depth) for p in ("A", "B")
        }
        self.acc = {(s, d): _Acc(cfg.coders) for s in cfg.schemes for d in _DIRS}
        self.prev_end = {(s, d): None for s in cfg.schemes for d in _DIRS}
        self.pending = []
        self.held = {(s, d): [] for s in cfg.schemes for d in _DIRS}
        self.swap_stash = {(s, d): None for s in cfg.schemes for d in _DIRS}
        self.send_epoch = {}
        self.recv_epoch = {}
        self.needs_resync = {}
        self.resyncs = {}
        self.dirty = {}  # pairing lost a message; true until a resync lands
        for s in cfg.schemes:
            for key in self._pairings(s):
                self.send_epoch[key] = 0
                self.recv_epoch[key] = 0
                self.needs_resync[key] = False
                self.resyncs[key] = 0
                self.dirty[key] = False
        self.send_idx = {d: 0 for d in _DIRS}
        self._counter = 0
        self._in_batch = []

    @staticmethod
    def _pairings(scheme):
        if scheme == "ppbms":
            return [("ppbms",)]
        return [(scheme, d) for d in _DIRS]

    @staticmethod
    def _pairing(scheme, direction):
        return ("ppbms",) if scheme == "ppbms" else (scheme, direction)

    # -- delivery ---------------------------------------------------------

    def _outstanding(self, scheme) -> int:
        k = sum(1 for e in self.pending if e.scheme == scheme)
        k += sum(1 for e in self._in_batch if e.scheme == scheme)
        k += sum(len(self.held[(scheme, d)]) for d in _DIRS)
        k += sum(1 for d in _DIRS if self.swap_stash[(scheme, d)] is not None)
        return k

    def _assert_consistent(self, scheme):
        if scheme == "sbms" or self._outstanding(scheme):
            return
        if any(
            self.needs_resync[k] or self.dirty[k] for k in self._pairings(scheme)
        ):
            return
        if scheme == "spbms":
            for d in _DIRS:
                if not self.spbms_enc[d].support_set == self.spbms_dec[d].support_set:
                    raise InvariantError(
                        f"spbms {d}: encoder and decoder support sets diverged"
                    )
        else:
            if not self.ppbms["A"].support_set == self.ppbms["B"].support_set:
                raise InvariantError("ppbms: the two peers' support sets diverged")

    def _deliver(self, env: _Envelope) -> str:
        scheme, d = env.scheme, env.direction
        if scheme == "sbms":
            rt = sbms_decode(env.msg, self.cfg.n)
            if not rt == env.snap:
                raise InvariantError(f"sbms {d} message {env.idx}: reconstruction differs")
            return "ok"
        key = self._pairing(scheme, d)
        if env.epoch < self.recv_epoch[key]:
            return "discard"
        if env.epoch > self.recv_epoch[key] and not env.msg.resync:
            self._hold(env)
            return "held"
        if env.msg.resync:
            self.recv_epoch[key] = env.epoch
            self.dirty[key] = False
            for dd in _DIRS if scheme == "ppbms" else [d]:
                self.held[(scheme, dd)] = [
                    e for e in self.held[(scheme, dd)] if e.epoch >= env.epoch
                ]
        try:
            if scheme == "spbms":
                out = self.spbms_dec[d].decode(env.msg)
                if not out == env.snap:
                    raise InvariantError(
                        f"spbms {d} message {env.idx}: reconstruction differs"
                    )
            else:
                receiver = _RECEIVER[d]
                out = self.ppbms[receiver].decode(env.msg)
                truth = env.snap.bits[out.locations - env.snap.offset]
                if not np.array_equal(np.asarray(out.bits, dtype=bool), truth):
                    raise InvariantError(
                        f"ppbms {d} message {env.idx}: reported bits differ from snapshot"
                    )
            if self.cfg.keep_messages:
                self.acc[(scheme, d)].decoded.append(out)
            return "ok"
        except MissingReferenceError as exc:
            if exc.ahead:
                self._hold(env)
                return "held"
            # Reference evicted: designed recovery is a pair resync.
            self.needs_resync[key] = True
            self.dirty[key] = True
            return "discard"

    def _hold(self, env: _Envelope):
        q = self.held[(env.scheme, env.direction)]
        q.append(env)
        if len(q) > self.cfg.archive_depth:
            key = self._pairing(env.scheme, env.direction)
            self.needs_resync[key] = True
            self.dirty[key] = True
            q.clear()

    def _pump(self, scheme):
        progressed = True
        while progressed:
            progressed = False
            for d in _DIRS:
                q = self.held[(scheme, d)]
                if not q:
                    continue
                self.held[(scheme, d)] = []
                for env in sorted(q, key=lambda e: e.idx):
                    if self._deliver(env) == "ok":
                        progressed = True

    def _deliver_due(self, now: float):
        due = sorted(
            (e for e in self.pending if e.due <= now), key=lambda e: (e.due, e.counter)
        )
        if not due:
            return
        self.pending = [e for e in self.pending if e.due > now]
        for k, env in enumerate(due):
            self._in_batch = due[k + 1 :]
            if self._deliver(env) == "ok":
                self._pump(env.scheme)
            self._assert_consistent(env.scheme)
        self._in_batch = []

    # -- sending ----------------------------------------------------------

    def _encode(self, scheme, d, snap, resync):
        if scheme == "sbms":
            return sbms_encode(snap), np.arange(snap.offset, snap.end, dtype=np.int64)
        if scheme == "spbms":
            enc = self.spbms_enc[d]
            msg = enc.make_resync(snap) if resync else enc.encode(snap)
            return msg, enc.last_locations
        sess = self.ppbms[_SENDER[d]]
        msg = sess.make_resync(snap) if resync else sess.encode(snap)
        return msg, sess.last_locations

    def send(self, eidx, t, d, measured):
        snap = self.peers[_SENDER[d]].snapshot(t)
        idx = self.send_idx[d]
        self.send_idx[d] += 1
        for scheme in self.cfg.schemes:
            key = self._pairing(scheme, d)
            resync = scheme != "sbms" and self.needs_resync[key]
            msg, locs = self._encode(scheme, d, snap, resync)
            if resync:
                self.needs_resync[key] = False
                self.send_epoch[key] += 1
                self.resyncs[key] += 1
                self.prev_end[(scheme, d)] = None
                if scheme == "ppbms":
                    self.prev_end[("ppbms", _other_dir(d))] = None
            ideal = _ideal_bits(
                self.cfg.curve,
                snap.offset,
                locs,
                np.asarray(msg.payload, dtype=bool),
                self.prev_end[(scheme, d)],
                self.cfg.T,
                scheme == "sbms",
            )
            self.prev_end[(scheme, d)] = snap.end
            if measured:
                a = self.acc[(scheme, d)]
                a.messages += 1
                a.payload_bits.append(msg.n_bits)
                a.ideal.append(ideal)
                a.payloads.append(np.asarray(msg.payload, dtype=bool))
                if scheme == "spbms":
                    a.ss.append(len(self.spbms_enc[d].support_set))
                elif scheme == "ppbms":
                    a.ss.append(len(self.ppbms[_SENDER[d]].support_set))
                for c in self.cfg.coders:
                    if msg.n_bits:
                        a.coder_bytes[c] += len(encode_bits(c, msg.payload))
            self._route(eidx, scheme, d, msg, snap, idx)

    def _route(self, eidx, scheme, d, msg, snap, idx):
        script = self.script
        if (d, idx) in script.drops:
            self.acc[(scheme, d)].drops += 1
            if scheme != "sbms":
                self.dirty[self._pairing(scheme, d)] = True
            return
        env = _Envelope(
            due=eidx + 1 + script.delays.get((d, idx), 0),
            counter=self._counter,
            scheme=scheme,
            direction=d,
            epoch=self.send_epoch[self._pairing(scheme, d)],
            msg=msg,
            snap=snap,
            idx=idx,
        )
        self._counter += 1
        stash_key = (scheme, d)
        if (d, idx) in script.swaps:
            if self.swap_stash[stash_key] is not None:
                raise ValueError(f"overlapping swaps on direction {d}")
            self.swap_stash[stash_key] = env
            return
        self.pending.append(env)
        stashed = self.swap_stash[stash_key]
        if stashed is not None and stashed.idx == idx - 1:
            stashed.due = env.due
            stashed.counter = self._counter
            self._counter += 1
            self.pending.append(stashed)  # after env: inverted arrival
            self.swap_stash[stash_key] = None

    # -- main loop --------------------------------------------------------

    def run(self) -> SimResult:
        cfg = self.cfg
        warm = cfg.warmup_periods
        periods = warm + cfg.rounds
        events = []
        for i in range(periods):
            events.append((i * cfg.T, "ba"))
            events.append((i * cfg.T + cfg.tau, "ab"))
        # tau == T makes A's send coincide with B's next; keep A first, the
        # order they were scheduled in.
        events.sort(key=lambda e: (e[0], e[1]))
        measured_from = 2 * warm
        for eidx, (t, d) in enumerate(events):
            self._deliver_due(eidx)
            self.send(eidx, t, d, eidx >= measured_from)
        for key, env in self.swap_stash.items():
            if env is not None:  # swap named a final message; deliver it late
                self.pending.append(env)
                self.swap_stash[key] = None
        self._deliver_due(math.inf)
        for scheme in cfg.schemes:
            self._assert_consistent(scheme)
        stats = []
        payloads = {}
        ss_sizes = {}
        ideal = {}
        decoded = {}
        for scheme in cfg.schemes:
            for d in _DIRS:
                a = self.acc[(scheme, d)]
                resyncs = self.resyncs[self._pairing(scheme, d)]
                stats.append(a.stats(scheme, d, resyncs))
                payloads[(scheme, d)] = a.payloads
                ss_sizes[(scheme, d)] = np.asarray(a.ss, dtype=np.int64)
                ideal[(scheme, d)] = np.asarray(a.ideal, dtype=np.float64)
                if cfg.keep_messages:
                    decoded[(scheme, d)] = a.decoded
        return SimResult(
            n=cfg.n,
            T=cfg.T,
            tau=cfg.tau,
            rounds=cfg.rounds,
            seed=cfg.seed,
            source="synthetic",
            schemes=cfg.schemes,
            coders=cfg.coders,
            stats=tuple(stats),
            payloads=payloads,
            ss_sizes=ss_sizes,
            ideal_bits=ideal,
            decoded=decoded,
        )


def _other_dir(d):
    return "ba" if d == "ab" else "ab"


def run_synthetic(config: SimConfig) -> SimResult:
    """Drive the full protocol over synthetic peers; see the module
    docstring for what is asserted along the way."""
    return _Engine(config, None).run()


def reorder_fault_run(config: SimConfig, script: ReorderScript) -> SimResult:
    """Like run_synthetic but with scripted delivery faults; resyncs are
    counted in the result rather than treated as failures."""
    return _Engine(config, script).run()


def run_trace(trace, schemes=("spbms",), coders=(), keep_messages: bool = False) -> SimResult:
    """Replay recorded buffer maps through the codecs, in record order.

    ``trace`` is a path or a list of TraceRecords.  Records are deduped
    first; every record counts toward the statistics (a trace has no
    warm-up, so the bootstrap message is part of the mean).  The first
    peer to appear plays B (the ``ba`` sender).  Ideal code lengths need
    the generative model, so they are NaN here.
    """
    if isinstance(trace, (str, bytes)) or hasattr(trace, "__fspath__"):
        records = traceio.parse_trace(trace)
    else:
        records = list(trace)
        traceio._validate(records)
    records = traceio.dedupe(records)
    schemes = tuple(schemes)
    bad = [s for s in schemes if s not in SCHEMES]
    if bad or not schemes:
        raise ValueError(f"schemes must be a nonempty subset of {SCHEMES}")
    coders = tuple(coders)
    bad = [c for c in coders if c not in CODER_NAMES]
    if bad:
        raise ValueError(f"unknown coders {bad}; choose from {CODER_NAMES}")
    if not records:
        raise ValueError("empty trace")
    n = records[0].bm.n
    order = []
    for rec in records:
        if rec.peer not in order:
            order.append(rec.peer)
    if "ppbms" in schemes and len(order) != 2:
        raise ValueError(
            f"ppbms replay needs exactly two peers, trace has {len(order)} ({order})"
        )
    dir_of = {}
    for k, peer in enumerate(order[:2]):
        dir_of[peer] = _DIRS[1 - k]  # first peer plays B -> direction 'ba'
    spbms_enc = {p: SpbmsEncoder(n) for p in order}
    spbms_dec = {p: SpbmsDecoder(n) for p in order}
    sessions = {p: PpbmsSession(n) for p in order[:2]}
    acc = {(s, d): _Acc(coders) for s in schemes for d in _DIRS}

    def _account(scheme, d, msg, ss_len, decoded_out):
        a = acc[(scheme, d)]
        a.messages += 1
        a.payload_bits.append(msg.n_bits)
        a.ideal.append(float("nan"))
        a.payloads.append(np.asarray(msg.payload, dtype=bool))
        if ss_len is not None:
            a.ss.append(ss_len)
        if keep_messages and decoded_out is not None:
            a.decoded.append(decoded_out)
        for c in coders:
            if msg.n_bits:
                a.coder_bytes[c] += len(encode_bits(c, msg.payload))

    for rec in records:
        peer = rec.peer
        d = dir_of.get(peer, "ab")
        for scheme in schemes:
            if scheme == "sbms":
                msg = sbms_encode(rec.bm)
                if not sbms_decode(msg, n) == rec.bm:
                    raise InvariantError(f"sbms replay mismatch for peer {peer}")
                _account(scheme, d, msg, None, rec.bm)
            elif scheme == "spbms":
                msg = spbms_enc[peer].encode(rec.bm)
                out = spbms_dec[peer].decode(msg)
                if not out == rec.bm:
                    raise InvariantError(f"spbms replay mismatch for peer {peer}")
                if not spbms_dec[peer].support_set == spbms_enc[peer].support_set:
                    raise InvariantError(f"spbms replay support sets diverged for {peer}")
                _account(scheme, d, msg, len(spbms_enc[peer].support_set), out)
            else:
                if peer not in sessions:
                    continue
                other = order[1 - order.index(peer)]
                msg = sessions[peer].encode(rec.bm)
                out = sessions[other].decode(msg)
                truth = rec.bm.bits[out.locations - rec.bm.offset]
                if not np.array_equal(np.asarray(out.bits, dtype=bool), truth):
                    raise InvariantError(f"ppbms replay mismatch for peer {peer}")
                if not sessions[peer].support_set == sessions[other].support_set:
                    raise InvariantError("ppbms replay support sets diverged")
                _account(scheme, d, msg, len(sessions[peer].support_set), out)

    stats = []
    payloads = {}
    ss_sizes = {}
    ideal = {}
    decoded = {}
    for scheme in schemes:
        for d in _DIRS:
            a = acc[(scheme, d)]
            stats.append(a.stats(scheme, d, 0))
            payloads[(scheme, d)] = a.payloads
            ss_sizes[(scheme, d)] = np.asarray(a.ss, dtype=np.int64)
            ideal[(scheme, d)] = np.asarray(a.ideal, dtype=np.float64)
            if keep_messages:
                decoded[(scheme, d)] = a.decoded
    return SimResult(
        n=n,
        T=0,
        tau=0,
        rounds=len(records),
        seed=0,
        source="trace",
        schemes=schemes,
        coders=coders,
        stats=tuple(stats),
        payloads=payloads,
        ss_sizes=ss_sizes,
        ideal_bits=ideal,
        decoded=decoded,
    )
