import math

import numpy as np
import pytest

from dasis.montecarlo import (
    BerCurve,
    BerPoint,
    StopRule,
    bpsk_detect,
    bpsk_modulate,
    curve_to_csv,
    estimate_ber,
    noise_variance_for_snr,
    read_curve_csv,
    snr_sweep,
    write_curve_csv,
)
from dasis.pipelines import DigitalPipeline, awgn_pipeline

from oracles import analytic_bpsk_ber, q_function


class TestBpskModulate:
    def test_conventions(self):
        np.testing.assert_array_equal(bpsk_modulate([0]), [1.0 + 0j])
        np.testing.assert_array_equal(bpsk_modulate([1]), [-1.0 + 0j])
        np.testing.assert_array_equal(bpsk_modulate([0, 1, 1, 0]), [1, -1, -1, 1])


class TestBpskDetect:
    def test_sign_rule(self):
        bits = bpsk_detect(np.array([2.3, -0.7]), 1.0, 0, 2)
        np.testing.assert_array_equal(bits, [0, 1])

    def test_complex_gain_rotation(self):
        assert bpsk_detect(np.array([5j]), 1j, 0, 1)[0] == 0

    def test_round_trip_noise_free(self, rng):
        bits = rng.integers(0, 2, 1000)
        series = bpsk_modulate(bits)
        np.testing.assert_array_equal(bpsk_detect(series, 1.0, 0, 1000), bits)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            bpsk_detect(np.zeros(4), 0.0, 0, 2)
        with pytest.raises(ValueError):
            bpsk_detect(np.zeros(4), 1.0, 3, 2)


class TestBerPoint:
    def test_counts_and_ci(self):
        p = BerPoint.from_counts(10.0, 25, 10000)
        assert p.ber == 0.0025
        assert p.ci_half_width == pytest.approx(1.96 * math.sqrt(0.0025 * 0.9975 / 10000))

    def test_error_conservation(self):
        with pytest.raises(ValueError):
            BerPoint.from_counts(0.0, 5, 4)
        with pytest.raises(ValueError):
            BerPoint.from_counts(0.0, 0, 0)


class TestNoiseVariance:
    def test_received_definition_uses_response_energy(self, paper_taps):
        sigma2 = noise_variance_for_snr(10.0, paper_taps.taps, "received")
        energy = float(np.sum(np.abs(paper_taps.taps) ** 2))
        assert sigma2 == pytest.approx(energy / 10.0)

    def test_transmit_definition_ignores_gains(self, paper_taps):
        assert noise_variance_for_snr(20.0, paper_taps.taps, "transmit") == pytest.approx(0.01)

    def test_unknown_definition(self):
        with pytest.raises(ValueError):
            noise_variance_for_snr(0.0, np.ones(1), "nonsense")


class TestEstimateBer:
    def test_noiseless_identity_link_is_error_free(self):
        point = estimate_ber(
            awgn_pipeline(), math.inf, StopRule(min_errors=10, max_bits=50_000), seed=0
        )
        assert point.ber == 0.0
        assert point.bit_errors == 0
        assert point.bits_simulated > 0

    def test_awgn_matches_q_function_at_one_percent(self):
        snr_db = 4.3228  # Q(sqrt(2 snr)) = 1e-2
        point = estimate_ber(
            awgn_pipeline(), snr_db, StopRule(min_errors=2000, max_bits=10_000_000), seed=11
        )
        theory = q_function(math.sqrt(2.0 * 10 ** (snr_db / 10)))
        assert point.ber == pytest.approx(theory, rel=0.10)

    def test_no_equalization_error_floor(self, paper_taps):
        pipe = DigitalPipeline(paper_taps, "none")
        stop = StopRule(min_errors=100, max_bits=200_000)
        b60 = estimate_ber(pipe, 60.0, stop, seed=3)
        b80 = estimate_ber(pipe, 80.0, stop, seed=4)
        assert b60.ber > 1e-3 and b80.ber > 1e-3
        assert 0.5 < b60.ber / b80.ber < 2.0

    def test_matches_analytic_isi_oracle(self, paper_taps):
        pipe = DigitalPipeline(paper_taps, "none")
        point = estimate_ber(
            pipe, 8.0, StopRule(min_errors=4000, max_bits=2_000_000), seed=5
        )
        theory = analytic_bpsk_ber(paper_taps.taps, 8.0, "received")
        # the analytic value ignores block edges, allow a few percent plus CI
        assert abs(point.ber - theory) < 0.05 * theory + 3 * point.ci_half_width


class TestSnrSweep:
    def test_single_point_matches_estimate(self):
        pipe = awgn_pipeline()
        stop = StopRule(min_errors=50, max_bits=100_000)
        curve = snr_sweep(pipe, [6.0], stop, seed=9)
        point = estimate_ber(pipe, 6.0, stop, seed=[9, 0])
        assert curve.points[0] == point
        assert curve.label == "awgn"

    def test_monotone_for_isi_free_link(self):
        stop = StopRule(min_errors=300, max_bits=500_000)
        curve = snr_sweep(awgn_pipeline(), [0.0, 2.0, 4.0, 6.0, 8.0, 10.0], stop, seed=2)
        bers = [p.ber for p in curve.points]
        cis = [p.ci_half_width for p in curve.points]
        for (b1, c1), (b2, c2) in zip(zip(bers, cis), zip(bers[1:], cis[1:])):
            assert b2 - c2 < b1 + c1

    def test_unsorted_grid_rejected(self):
        with pytest.raises(ValueError):
            snr_sweep(awgn_pipeline(), [4.0, 2.0], StopRule(10, 10_000), seed=0)
        with pytest.raises(ValueError):
            snr_sweep(awgn_pipeline(), [], StopRule(10, 10_000), seed=0)

    def test_deterministic_and_thread_invariant(self, paper_taps):
        pipe = DigitalPipeline(paper_taps, "none")
        stop = StopRule(min_errors=100, max_bits=100_000)
        a = snr_sweep(pipe, [45.0, 50.0, 55.0], stop, seed=7, threads=1)
        b = snr_sweep(pipe, [45.0, 50.0, 55.0], stop, seed=7, threads=8)
        c = snr_sweep(pipe, [45.0, 50.0, 55.0], stop, seed=7, threads=1)
        assert a.points == b.points == c.points


class TestConfidenceCalibration:
    def test_q_value_inside_ci_at_least_90_percent(self):
        snr_db = 4.3228
        theory = q_function(math.sqrt(2.0 * 10 ** (snr_db / 10)))
        stop = StopRule(min_errors=100, max_bits=1_000_000)
        hits = 0
        for run in range(100):
            point = estimate_ber(awgn_pipeline(), snr_db, stop, seed=[100, run])
            if abs(point.ber - theory) <= point.ci_half_width:
                hits += 1
        assert hits >= 90


class TestCsvRoundTrip:
    def test_write_read_round_trip(self, tmp_path):
        curve = BerCurve(
            label="demo",
            points=(
                BerPoint.from_counts(0.0, 50, 1000),
                BerPoint.from_counts(2.0, 20, 1000),
            ),
        )
        path = tmp_path / "demo.csv"
        write_curve_csv(curve, str(path))
        assert not (tmp_path / "demo.csv.tmp").exists()
        loaded = read_curve_csv(str(path))
        assert loaded == curve
        assert curve_to_csv(loaded) == path.read_text()

    def test_header_enforced(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("wrong,header\n")
        with pytest.raises(ValueError):
            read_curve_csv(str(bad))

    def test_curve_requires_ascending_grid(self):
        with pytest.raises(ValueError):
            BerCurve(
                label="x",
                points=(
                    BerPoint.from_counts(2.0, 1, 10),
                    BerPoint.from_counts(2.0, 1, 10),
                ),
            )
