import math

import numpy as np
import pytest

from spsqkd import (
    ChannelParams,
    DetectorParams,
    DomainError,
    OpticsParams,
    SourceParams,
    TallySet,
    TrialConfig,
    estimate_theta,
    expected_basis_rates,
    run,
    sift,
    split_run,
)

# Boosted parameters: enough clicks at modest pulse counts to make the
# statistical comparisons sharp while staying inside the linear-gain guard.
BOOSTED_SOURCE = SourceParams(mu=0.02, g2_pulsed=0.3)
BOOSTED_OPTICS = OpticsParams(
    eta_z=0.9, eta_x=0.8, e_z_intrinsic=0.02, e_x_intrinsic=0.03,
    v_peak=0.95, delay_mismatch_um=10.0,
)
BOOSTED_CHANNEL = ChannelParams(loss_db=3.0, background_cps=50_000.0)
BOOSTED_DETECTOR = DetectorParams(dark_prob=1e-5, gate_ns=1.0)


def test_all_no_click_without_photons_or_noise():
    trial = TrialConfig(n_pulses=50_000, seed=2)
    tally = run(
        trial,
        SourceParams(mu=0.0, g2_pulsed=0.356),
        OpticsParams(),
        ChannelParams(loss_db=0.0),
        DetectorParams(dark_prob=0.0),
    )
    no_click = tally.counts[:, :, :, 3].sum()
    assert no_click == trial.n_pulses
    assert tally.counts[:, :, :, :3].sum() == 0


def test_tally_conservation():
    trial = TrialConfig(n_pulses=300_000, seed=5, protocol="rfi")
    tally = run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL, BOOSTED_DETECTOR)
    tally.validate()
    assert tally.counts.sum() == trial.n_pulses


def test_same_seed_is_bit_identical():
    trial = TrialConfig(n_pulses=400_000, seed=99)
    a = run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL, BOOSTED_DETECTOR)
    b = run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL, BOOSTED_DETECTOR)
    assert a == b


def test_thread_count_does_not_change_result():
    trial = TrialConfig(n_pulses=1_500_000, seed=42)
    serial = run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL, BOOSTED_DETECTOR)
    threaded = run(
        trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL, BOOSTED_DETECTOR, threads=5
    )
    assert serial == threaded


def test_different_seed_changes_result():
    a = run(TrialConfig(n_pulses=200_000, seed=1), BOOSTED_SOURCE, BOOSTED_OPTICS,
            BOOSTED_CHANNEL, BOOSTED_DETECTOR)
    b = run(TrialConfig(n_pulses=200_000, seed=2), BOOSTED_SOURCE, BOOSTED_OPTICS,
            BOOSTED_CHANNEL, BOOSTED_DETECTOR)
    assert a != b


class TestStatisticalOracle:
    def test_gains_and_qbers_within_3_sigma(self):
        rates = expected_basis_rates(
            BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL, BOOSTED_DETECTOR
        )
        trial = TrialConfig(n_pulses=4_000_000, seed=11, protocol="rfi")
        sifted = sift(run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL,
                          BOOSTED_DETECTOR, threads=4))
        for basis, q_exp, e_exp in (
            ("Z", rates.q_z, rates.e_z),
            ("X", rates.q_x, rates.e_x),
            ("Y", rates.q_y, rates.e_y),
        ):
            n = sifted.assigned[basis]
            sigma_q = math.sqrt(q_exp * (1.0 - q_exp) / n)
            assert sifted.gain(basis) == pytest.approx(q_exp, abs=3.0 * sigma_q)
            n_con = sifted.conclusive[basis]
            sigma_e = math.sqrt(e_exp * (1.0 - e_exp) / n_con)
            assert sifted.qber(basis) == pytest.approx(e_exp, abs=3.0 * sigma_e)


class TestSplitRun:
    def test_single_slice_equals_run(self):
        trial = TrialConfig(n_pulses=250_000, seed=17)
        whole = run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL, BOOSTED_DETECTOR)
        parts = split_run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL,
                          BOOSTED_DETECTOR, 1)
        assert len(parts) == 1
        assert parts[0] == whole

    @pytest.mark.parametrize("n_blocks", [2, 3, 7, 12])
    def test_slices_sum_to_whole(self, n_blocks):
        # slice boundaries deliberately misaligned with the RNG block size
        trial = TrialConfig(n_pulses=1_000_003, seed=23, protocol="rfi")
        whole = run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL, BOOSTED_DETECTOR)
        parts = split_run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL,
                          BOOSTED_DETECTOR, n_blocks)
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        assert total == whole
        assert sum(p.n_pulses for p in parts) == trial.n_pulses

    def test_invalid_block_count(self):
        trial = TrialConfig(n_pulses=1000, seed=1)
        with pytest.raises(DomainError):
            split_run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL,
                      BOOSTED_DETECTOR, 0)

    def test_per_slice_rotations_recoverable(self):
        # 12 slices, each with its own frame rotation injected through the
        # measurement phase offset; estimate_theta sees the preparation-frame
        # lead, i.e. minus the injected offset.  Basis choice favors X/Y so
        # every slice collects over a thousand phase-basis coincidences.
        optics = OpticsParams(eta_z=0.9, eta_x=0.8, e_z_intrinsic=0.02,
                              e_x_intrinsic=0.01, v_peak=0.95)
        channel = ChannelParams(loss_db=0.0)
        detector = DetectorParams(dark_prob=1e-6, gate_ns=1.0)
        thetas = [k * 2.0 * math.pi / 12 + 0.26 for k in range(12)]
        trial = TrialConfig(n_pulses=12_000_000, seed=31, protocol="rfi",
                            q_z_alice=0.2, q_z_bob=0.2)
        parts = split_run(
            trial, BOOSTED_SOURCE, optics, channel, detector,
            12, phase_offsets=[-t for t in thetas], threads=4,
        )
        recovered = [estimate_theta(sift(p)) for p in parts]
        for got, expect in zip(recovered, thetas):
            delta = (got - expect + math.pi) % (2.0 * math.pi) - math.pi
            assert abs(delta) < 0.12
        # 12 distinct angles, one per slice
        assert len({round(t, 1) for t in recovered}) == 12


class TestTallyCsv:
    def test_round_trip(self, tmp_path):
        trial = TrialConfig(n_pulses=200_000, seed=8, protocol="rfi")
        tally = run(trial, BOOSTED_SOURCE, BOOSTED_OPTICS, BOOSTED_CHANNEL, BOOSTED_DETECTOR)
        path = tmp_path / "tally.csv"
        tally.to_csv(path)
        again = TallySet.from_csv(path)
        assert again == tally

    def test_header_required(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(Exception):
            TallySet.from_csv(path)

    def test_counts_never_negative(self):
        with pytest.raises(Exception):
            TallySet(np.full((3, 2, 3, 4), -1), 0)
