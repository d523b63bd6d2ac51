import numpy as np
import pytest

from bmkit import (
    BufferMap,
    MonotonicityError,
    PeerBufferState,
    SCurve,
    diff_new_fills,
    two_segment_curve,
)


def test_buffer_map_basics():
    bm = BufferMap(10, [0, 0, 1, 1])
    assert bm.n == 4
    assert bm.end == 14
    # position 0 is the oldest chunk; chunk id = offset + position
    assert bm.bit_for(12) and bm.bit_for(13)
    assert not bm.bit_for(10)
    assert bm.age_of(13) == 0  # newest
    assert bm.age_of(10) == 3  # oldest
    with pytest.raises(ValueError):
        bm.bit_for(14)
    with pytest.raises(ValueError):
        bm.age_of(9)


def test_buffer_map_validation():
    with pytest.raises(ValueError):
        BufferMap(-1, [1])
    with pytest.raises(ValueError):
        BufferMap(0, [])
    with pytest.raises(ValueError):
        BufferMap(0, [[1, 0]])
    bm = BufferMap(0, [1, 0])
    with pytest.raises(ValueError):
        bm.bits[0] = False


def test_hex_round_trip():
    bm = BufferMap(3, [1, 0, 1, 1, 0, 0, 0, 0, 1])
    assert BufferMap.from_hex(3, bm.to_hex(), 9) == bm
    # MSB-first packing: 1011 0000 | 1000 0000 -> b080
    assert bm.to_hex() == "b080"


def test_from_hex_rejects_dirty_padding():
    with pytest.raises(ValueError):
        BufferMap.from_hex(0, "b081", 9)  # a padding bit is set
    with pytest.raises(ValueError):
        BufferMap.from_hex(0, "b0", 9)  # too short


def test_diff_new_fills_contract():
    """Only 0->1 transitions inside the overlap plus filled appends count."""
    prev = BufferMap.from_hex(10, "30", 4)  # chunks 10..13 = 0,0,1,1
    cur = BufferMap.from_hex(11, "70", 4)  # chunks 11..14 = 0,1,1,1
    assert diff_new_fills(prev, cur) == {14}


def test_diff_new_fills_richer_case():
    prev = BufferMap(100, [0, 1, 0, 0, 1, 0])
    cur = BufferMap(102, [1, 0, 1, 1, 1, 0, 1, 0])
    # overlap 102..105: 0->1 at 102 and 105; appended 106..109 add 106, 108
    assert diff_new_fills(prev, cur) == {102, 105, 106, 108}


def test_diff_new_fills_same_offset():
    prev = BufferMap(5, [0, 0, 1])
    cur = BufferMap(5, [1, 0, 1])
    assert diff_new_fills(prev, cur) == {5}
    assert diff_new_fills(cur, cur) == set()


def test_diff_new_fills_detects_regression():
    prev = BufferMap(0, [1, 1, 0])
    cur = BufferMap(0, [1, 0, 0])
    with pytest.raises(MonotonicityError):
        diff_new_fills(prev, cur)
    # current window may never start before the previous one
    with pytest.raises(ValueError):
        diff_new_fills(BufferMap(4, [1]), BufferMap(3, [1, 1]))


def test_peer_state_snapshots_are_monotone():
    curve = two_segment_curve(24, 5, 0.7)
    for seed in range(10):
        peer = PeerBufferState("p", curve, rng=np.random.default_rng(seed))
        prev = peer.snapshot(0)
        for t in range(1, 40):
            cur = peer.snapshot(t)
            assert cur.offset == t
            assert cur.n == 24
            diff_new_fills(prev, cur)  # raises on any regression
            prev = cur


def test_peer_state_instant_fill_curve():
    peer = PeerBufferState("p", SCurve(np.ones(8)), rng=np.random.default_rng(0))
    assert peer.snapshot(0).bits.all()
    assert peer.snapshot(123).bits.all()


def test_peer_state_never_fill_curve():
    peer = PeerBufferState("p", SCurve(np.zeros(8)), rng=np.random.default_rng(0))
    assert not peer.snapshot(0).bits.any()
    assert not peer.snapshot(50).bits.any()


def test_peer_state_bits_match_sampled_delays():
    curve = two_segment_curve(16, 4, 0.5)
    peer = PeerBufferState("p", curve, rng=np.random.default_rng(42))
    t = 30
    snap = peer.snapshot(t)
    for chunk in range(snap.offset, snap.end):
        expect = peer.fill_delay(chunk) <= snap.age_of(chunk)
        assert snap.bit_for(chunk) == expect


def test_peer_state_delay_fn_hook():
    curve = two_segment_curve(6, 2, 0.5)
    peer = PeerBufferState("p", curve, delay_fn=lambda c: c % 3)
    assert peer.fill_delay(4) == 1
    # a delay past the window width is clamped to "never in window"
    peer2 = PeerBufferState("p", curve, delay_fn=lambda c: 99)
    assert peer2.fill_delay(0) == 6
    assert not peer2.snapshot(10).bits.any()


def test_peer_state_base_offset_and_lazy_growth():
    curve = two_segment_curve(8, 2, 0.9)
    peer = PeerBufferState("p", curve, base_offset=100, rng=np.random.default_rng(1))
    assert peer.offset_at(0) == 100
    assert peer.snapshot(0).offset == 100
    with pytest.raises(ValueError):
        peer.fill_delay(99)
    # far beyond one allocation batch
    snap = peer.snapshot(10_000)
    assert snap.offset == 10_100
    with pytest.raises(ValueError):
        peer.snapshot(-1)


def test_peer_state_snapshots_are_reproducible():
    curve = two_segment_curve(12, 3, 0.6)
    a = PeerBufferState("p", curve, rng=np.random.default_rng(9))
    b = PeerBufferState("p", curve, rng=np.random.default_rng(9))
    for t in (0, 3, 17):
        assert a.snapshot(t) == b.snapshot(t)
