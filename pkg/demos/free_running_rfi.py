"""Free-running RFI acquisition: misalignment grouping beats pooled data.

Without active phase stabilization the relative phase frame between the
transmitter and receiver interferometers drifts.  Pooling all data washes
the phase-basis correlators out, while slicing the stream in time,
estimating the misalignment angle of each slice, and combining slices into
12 angle groups keeps each group's correlation statistic C high.

The demo drives the Monte Carlo engine with a frame that rotates a full
turn across 24 time slices, then compares the pooled statistics with the
grouped ones and evaluates the weighted RFI key rate over the groups.
"""

import math

from spsqkd import (
    ChannelParams,
    DetectorParams,
    KeyRateInput,
    OpticsParams,
    SecurityParams,
    SourceParams,
    TrialConfig,
    c_statistic,
    grouped_secure_key_rate,
    rfi_group,
    run,
    sift,
    split_run,
)

# Bright test parameters: plenty of phase-basis statistics per slice.
source = SourceParams(mu=0.02, g2_pulsed=0.3)
optics = OpticsParams(eta_z=0.9, eta_x=0.8, e_z_intrinsic=0.02, e_x_intrinsic=0.01,
                      v_peak=0.95)
channel = ChannelParams(loss_db=0.0)
detector = DetectorParams(dark_prob=1e-6)
trial = TrialConfig(n_pulses=24_000_000, seed=99, protocol="rfi",
                    q_z_alice=0.25, q_z_bob=0.25)

N_SLICES = 24
drift = [-(k / N_SLICES) * 2.0 * math.pi for k in range(N_SLICES)]  # one full turn

slices = [
    sift(t)
    for t in split_run(trial, source, optics, channel, detector, N_SLICES,
                       phase_offsets=drift, threads=4)
]

pooled = slices[0]
for s in slices[1:]:
    pooled = pooled + s
print(f"pooled over the full drift:  E_x = {pooled.qber('X'):.3f},  "
      f"C = {c_statistic(pooled):.4f}   (washed out)")

groups = rfi_group(slices)
print("\n12 misalignment groups:")
print(f"{'group':>5} {'theta':>7} {'weight':>7} {'C':>7}")
populated = []
for i, g in enumerate(groups):
    if g.weight == 0.0:
        print(f"{i:>5} {'-':>7} {0.0:7.3f} {'-':>7}")
        continue
    c_value = c_statistic(g.tallies)
    populated.append((g, c_value))
    print(f"{i:>5} {g.theta:7.3f} {g.weight:7.3f} {c_value:7.4f}")

# Weighted RFI key rate over the groups, first in the asymptotic limit where
# only the correlation statistics matter.  The pooled data leak everything
# (C near zero); the grouped data keep most of the key.
security = SecurityParams()


def rfi_input(tallies, c_value, n_z=math.inf):
    return KeyRateInput(
        q_z=tallies.gain("Z"),
        e_z=tallies.qber("Z"),
        c_value=min(c_value, 2.0),
        mu=source.mu,
        g2_pulsed=source.g2_pulsed,
        n_z=n_z,
        protocol="rfi",
    )


grouped_inf = grouped_secure_key_rate(
    [(g.weight, rfi_input(g.tallies, c)) for g, c in populated], security
)
pooled_inf = grouped_secure_key_rate(
    [(1.0, rfi_input(pooled, c_statistic(pooled)))], security
)
print(f"\nasymptotic RFI rate, grouped: {grouped_inf.rate:.3e} per pulse")
print(f"asymptotic RFI rate, pooled:  {pooled_inf.rate:.3e} per pulse")

# With each group's own (short, demo-sized) block length the per-group
# penalties still dominate; a production acquisition runs far longer.
grouped_finite = grouped_secure_key_rate(
    [
        (g.weight, rfi_input(g.tallies, c, n_z=max(g.tallies.conclusive["Z"], 1.0)))
        for g, c in populated
    ],
    security,
)
print(f"finite-size grouped rate at these demo block lengths: "
      f"{grouped_finite.rate:.3e} per pulse "
      f"(extrapolated per group: {grouped_finite.extrapolated})")
