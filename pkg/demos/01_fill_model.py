"""
Fill curves: modelling how a streaming buffer fills with age
============================================================

A peer's buffer window holds the last n chunks of the stream.  The fill
curve gives, for each age a chunk has spent in the window, the probability
that it has arrived by then.  Age 0 is the newest position, so the curve
starts near 0 and climbs towards 1 -- it is simply the CDF of the chunk
fill delay.
"""

import numpy as np

from bmkit.entropy import calibrate_curve, h_sbms
from bmkit.fillmodel import SCurve, sample_fill_delay, two_segment_curve
from bmkit.bitmap import PeerBufferState

# -- a curve by hand -----------------------------------------------------
# Two straight segments: a fast ramp to (breakpoint, p_break), then a slow
# climb to 1 at the oldest age.  This is the usual shape for swarming
# downloads: most chunks arrive quickly, stragglers trickle in.

curve = two_segment_curve(16, breakpoint=3, p_break=0.85)
print("ages      :", " ".join(f"{a:5d}" for a in range(0, 16, 3)))
print("fill prob :", " ".join(f"{curve.probs[a]:5.2f}" for a in range(0, 16, 3)))

# Each age contributes h(p) bits of uncertainty; the whole window's
# information content is the sum.
print(f"whole-window information: {h_sbms(curve):.2f} bits "
      f"(out of {curve.n} raw bits)")

# -- calibrating to a target ----------------------------------------------
# Often you know how much information a full bitmap carries (measured from
# a real swarm) and want a synthetic curve that reproduces it.  The
# calibrator picks the two-segment curve whose window sums to the target.

params = calibrate_curve(77.0, 456)
cal = params.to_curve(456)
print(f"\ncalibrated to 77 bits over n=456: breakpoint={params.breakpoint}, "
      f"p_break={params.p_break:.4f} -> {h_sbms(cal):.2f} bits")

# -- sampling delays ------------------------------------------------------
# The curve doubles as an inverse-CDF sampler.  A delay of n means the
# chunk never fills while inside the window.

rng = np.random.default_rng(7)
delays = [sample_fill_delay(cal, rng.random()) for _ in range(8)]
print("\neight sampled fill delays:", delays)

# -- a generative peer ----------------------------------------------------
# PeerBufferState drives a sliding window from sampled delays: snapshot(t)
# is the buffer map t chunk-times after creation.  Position 0 is the
# OLDEST chunk, so reading the bits back-to-front puts them in age order
# and the empirical fill frequency must reproduce the curve.

peer = PeerBufferState("demo", curve, rng=np.random.default_rng(42))
rounds = 4000
freq = np.zeros(curve.n)
for t in range(rounds):
    freq += peer.snapshot(t).bits[::-1]
freq /= rounds
err = np.abs(freq - curve.probs).max()
print(f"\n{rounds} snapshots later, worst |empirical - curve| = {err:.3f}")

bm = peer.snapshot(5)
print(f"snapshot(5): offset={bm.offset}, bits={''.join('1' if b else '0' for b in bm.bits)}")
print("(chunk ids", bm.offset, "..", bm.offset + bm.n - 1, ", oldest first)")
