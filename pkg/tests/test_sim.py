"""Two-peer exchange engine: measured sizes, trace replay, delivery faults."""

import math

import numpy as np
import pytest

from bmkit.entropy import h_ppbms, h_sbms, h_spbms
from bmkit.fillmodel import SCurve, two_segment_curve
from bmkit.sim import ReorderScript, SimConfig, reorder_fault_run, run_synthetic, run_trace
from bmkit.traceio import generate


def _cfg(**kw):
    base = dict(
        curve=two_segment_curve(32, 4, 0.8), T=8, tau=2, rounds=60, seed=3
    )
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(T=0)
    with pytest.raises(ValueError):
        _cfg(tau=9)  # tau > T
    with pytest.raises(ValueError):
        _cfg(T=33)  # T > n
    with pytest.raises(ValueError):
        _cfg(rounds=0)
    with pytest.raises(ValueError):
        _cfg(schemes=("spbms", "nope"))
    with pytest.raises(ValueError):
        _cfg(schemes=())
    with pytest.raises(ValueError):
        _cfg(coders=("zip",))
    with pytest.raises(ValueError):
        _cfg(offset_lag=-1)


def test_instant_fill_leaves_only_window_appends():
    """With every chunk buffered on arrival, spbms reports exactly the T
    fresh positions each period and ppbms splits them tau / T - tau."""
    curve = SCurve(np.ones(16))
    res = run_synthetic(SimConfig(curve, T=8, tau=3, rounds=40, seed=1))
    for d in ("ab", "ba"):
        assert res.row("sbms", d).mean_payload_bits == 16.0
        assert res.row("spbms", d).mean_payload_bits == 8.0
        assert res.row("spbms", d).mean_ss_size == 0.0
    assert res.row("ppbms", "ab").mean_payload_bits == 3.0
    assert res.row("ppbms", "ba").mean_payload_bits == 5.0
    for scheme in ("sbms", "spbms", "ppbms"):
        assert res.mean_ideal(scheme) == 0.0
        assert res.total_resyncs(scheme) == 0


def test_never_fill_keeps_the_whole_window_unknown():
    """With nothing ever buffered, every scheme ships n bits per message
    and none of them carry any information."""
    curve = SCurve(np.zeros(16))
    res = run_synthetic(SimConfig(curve, T=4, tau=1, rounds=40, seed=1))
    for scheme in ("sbms", "spbms", "ppbms"):
        for d in ("ab", "ba"):
            row = res.row(scheme, d)
            assert row.mean_payload_bits == 16.0
            assert row.std_payload_bits == 0.0
        assert res.mean_ideal(scheme) == 0.0


def test_measured_sizes_track_the_analytic_entropies(calibrated_curve):
    """Mean ideal code length per message converges to the formulas."""
    res = run_synthetic(
        SimConfig(calibrated_curve, T=20, tau=5, rounds=1200, seed=7)
    )
    assert res.mean_ideal("sbms") == pytest.approx(h_sbms(calibrated_curve), rel=0.02)
    assert res.mean_ideal("spbms") == pytest.approx(
        h_spbms(calibrated_curve, 20), rel=0.02
    )
    assert res.mean_ideal("ppbms") == pytest.approx(
        h_ppbms(calibrated_curve, 20, 5), rel=0.02
    )
    # Direction split: ab sees a tau-stale counterpart, ba a (T-tau)-stale one.
    from bmkit.entropy import h_ab, h_ba

    assert res.ideal_bits[("ppbms", "ab")].mean() == pytest.approx(
        h_ab(calibrated_curve, 20, 5), rel=0.03
    )
    assert res.ideal_bits[("ppbms", "ba")].mean() == pytest.approx(
        h_ba(calibrated_curve, 20, 5), rel=0.03
    )


def test_rounds_counts_measured_messages():
    """``rounds`` is the measured message count per direction; warm-up
    periods run before it and stay out of the statistics."""
    res = run_synthetic(_cfg(warmup=0, rounds=25))
    res2 = run_synthetic(_cfg(rounds=25))
    for scheme in ("sbms", "spbms", "ppbms"):
        for d in ("ab", "ba"):
            assert res.row(scheme, d).messages == 25
            assert res2.row(scheme, d).messages == 25
    # Without warm-up the whole-window bootstrap message is averaged in.
    assert (
        res.row("spbms", "ab").mean_payload_bits
        > res2.row("spbms", "ab").mean_payload_bits
    )


def test_csv_output_is_deterministic():
    a = run_synthetic(_cfg()).to_csv()
    b = run_synthetic(_cfg()).to_csv()
    assert a == b
    assert a.splitlines()[0].startswith("# n=32 T=8 tau=2 rounds=60 seed=3")
    header = a.splitlines()[1].split(",")
    assert header[:3] == ["scheme", "direction", "messages"]
    c = run_synthetic(_cfg(seed=4)).to_csv()
    assert c != a


def test_coder_byte_totals_are_reported():
    res = run_synthetic(_cfg(coders=("rle", "ac")))
    row = res.row("spbms", "ab")
    assert set(row.coder_bytes) == {"rle", "ac"}
    assert row.coder_bytes["rle"] > 0 and row.coder_bytes["ac"] > 0
    assert "rle_bytes" in res.to_csv().splitlines()[1]


def test_keep_messages_retains_decoded_traffic():
    res = run_synthetic(_cfg(keep_messages=True, warmup=0, rounds=10))
    assert len(res.decoded[("spbms", "ab")]) == 10
    assert len(res.payloads[("ppbms", "ba")]) == 10
    lean = run_synthetic(_cfg(warmup=0, rounds=10))
    assert lean.decoded == {}


def test_offset_lag_desynchronizes_the_windows():
    res = run_synthetic(_cfg(offset_lag=5))
    assert res.row("spbms", "ab").messages > 0
    assert res.total_resyncs("spbms") == 0


# ----------------------------------------------------------------------
# Trace replay
# ----------------------------------------------------------------------

def test_trace_replay_matches_synthetic_statistics(calibrated_curve):
    """Replaying a generated trace reproduces the synthetic payload means:
    the engine and the replay path drive the codecs identically."""
    T, tau, rounds = 20, 5, 600
    recs = generate(calibrated_curve, T=T, rounds=rounds, seed=11, tau=tau)
    rep = run_trace(recs, schemes=("spbms", "ppbms"))
    syn = run_synthetic(
        SimConfig(calibrated_curve, T=T, tau=tau, rounds=rounds, seed=11, warmup=0)
    )
    for scheme in ("spbms", "ppbms"):
        for d in ("ab", "ba"):
            assert rep.row(scheme, d).mean_payload_bits == pytest.approx(
                syn.row(scheme, d).mean_payload_bits, rel=0.05
            )
    assert rep.source == "trace" and rep.T == 0
    assert math.isnan(rep.row("spbms", "ab").mean_ideal_bits)


def test_trace_replay_from_file(tmp_path, calibrated_curve):
    from bmkit.traceio import write_trace

    recs = generate(calibrated_curve, T=20, rounds=30, seed=2)
    path = tmp_path / "t.tsv"
    write_trace(path, recs)
    rep = run_trace(path)
    assert rep.row("spbms", "ba").messages == 30


def test_trace_replay_single_record_is_all_bootstrap(calibrated_curve):
    recs = generate(calibrated_curve, T=20, rounds=1, seed=2)[:1]
    rep = run_trace(recs, schemes=("spbms",))
    assert rep.row("spbms", "ba").messages == 1
    assert rep.row("spbms", "ba").mean_payload_bits == 456.0


def test_trace_replay_validation(calibrated_curve):
    recs = generate(calibrated_curve, T=20, rounds=5, seed=2)
    solo = [r for r in recs if r.peer == "B"]
    with pytest.raises(ValueError, match="two peers"):
        run_trace(solo, schemes=("ppbms",))
    run_trace(solo, schemes=("spbms",))  # fine: spbms streams are per-peer
    with pytest.raises(ValueError, match="schemes"):
        run_trace(recs, schemes=("bogus",))
    with pytest.raises(ValueError, match="coders"):
        run_trace(recs, coders=("bogus",))
    with pytest.raises(ValueError, match="empty"):
        run_trace([])


# ----------------------------------------------------------------------
# Delivery faults
# ----------------------------------------------------------------------

def test_reorder_script_validation():
    ReorderScript(delays={("ab", 3): 2}, drops=[("ba", 1)], swaps=[("ab", 5)])
    with pytest.raises(ValueError):
        ReorderScript(delays={("up", 3): 2})
    with pytest.raises(ValueError):
        ReorderScript(delays={("ab", -1): 2})
    with pytest.raises(ValueError):
        ReorderScript(delays={("ab", 1): -2})
    with pytest.raises(ValueError):
        ReorderScript(drops=[("ab", -4)])


def test_empty_script_changes_nothing():
    cfg = _cfg()
    assert reorder_fault_run(cfg, ReorderScript()).to_csv() == run_synthetic(cfg).to_csv()


def test_adjacent_swaps_are_absorbed_by_the_archive():
    cfg = _cfg(rounds=50)
    script = ReorderScript(swaps=[("ab", 10), ("ba", 20), ("ab", 30)])
    res = reorder_fault_run(cfg, script)
    for scheme in ("sbms", "spbms", "ppbms"):
        assert res.total_resyncs(scheme) == 0


def test_short_delays_are_absorbed_by_the_archive():
    cfg = _cfg(rounds=50)
    script = ReorderScript(delays={("ab", 12): 2, ("ba", 25): 3})
    res = reorder_fault_run(cfg, script)
    for scheme in ("spbms", "ppbms"):
        assert res.total_resyncs(scheme) == 0


def test_a_dropped_message_forces_exactly_one_resync():
    cfg = _cfg(rounds=60)
    res = reorder_fault_run(cfg, ReorderScript(drops=[("ab", 15)]))
    assert res.total_resyncs("spbms") == 1
    assert res.total_resyncs("ppbms") == 1
    assert res.total_resyncs("sbms") == 0  # stateless: loss needs no repair
    # The run keeps producing sound statistics afterwards.
    assert res.row("spbms", "ab").messages > 30
    assert res.row("spbms", "ab").drops == 1


def test_delay_beyond_archive_depth_forces_resync():
    cfg = _cfg(rounds=80, archive_depth=4)
    res = reorder_fault_run(cfg, ReorderScript(delays={("ba", 10): 25}))
    assert res.total_resyncs("ppbms") >= 1
    assert res.row("ppbms", "ab").messages > 0


def test_mixed_faults_recover(calibrated_curve):
    cfg = SimConfig(calibrated_curve, T=20, tau=5, rounds=120, seed=5)
    script = ReorderScript(
        delays={("ab", 30): 25}, drops=[("ba", 50)], swaps=[("ab", 70)]
    )
    res = reorder_fault_run(cfg, script)
    for scheme in ("spbms", "ppbms"):
        assert res.total_resyncs(scheme) >= 1
        assert res.row(scheme, "ab").messages > 0
        assert res.row(scheme, "ba").messages > 0
