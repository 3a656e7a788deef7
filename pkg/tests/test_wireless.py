"""Tests for the Rayleigh-fading mappings."""

import math
from random import Random

import numpy as np
import pytest

from fcrelay.simulate import BUFFER1, BUFFER2, DISCARD
from fcrelay.wireless import (BUFFER1_AND_3, SlotOutcome, Topology,
                              WirelessChannel, WirelessParams, capacity,
                              classify_phase2_wireless,
                              erasure_equivalent_params, link_erasure_prob,
                              mac_corner_rates, sample_gain,
                              sic_erasure_probs, sic_phase2_outcome,
                              simulate_approach1, simulate_approach2,
                              solve_alpha_operating_point)

TOPO = Topology()


def _wp(snr_db: float, **kw) -> WirelessParams:
    return WirelessParams.from_topology(TOPO, snr=10 ** (snr_db / 10), **kw)


class TestGeometry:
    def test_default_chi_is_one(self):
        # 2*(1024+16)/2080 = 1 exactly, so the outage threshold is snr itself
        assert _wp(40).chi == pytest.approx(1.0)

    def test_path_loss_rates(self):
        wp = _wp(40)
        assert wp.lambda_sd == pytest.approx(20.0**3)
        assert wp.lambda_sr == pytest.approx(10.3**3)
        assert wp.lambda_rr == pytest.approx(5.0**3)

    def test_validation(self):
        with pytest.raises(ValueError):
            Topology(d_sd=0.0)
        with pytest.raises(ValueError):
            WirelessParams(1, 1, 1, 1, snr=-1)
        with pytest.raises(ValueError):
            WirelessParams(1, 1, 1, 1, snr=1, gamma_gap=1.5)


class TestOutage:
    def test_closed_form_value(self):
        # lam=1, snr=10, chi=1 -> 1 - exp(-0.1)
        got = link_erasure_prob(1.0, 10.0, 1024, 16, 2080)
        assert got == pytest.approx(-math.expm1(-0.1), abs=1e-12)

    def test_against_fading_monte_carlo(self):
        rng = np.random.default_rng(0)
        lam, snr = 2.0, 50.0
        g = rng.exponential(1.0 / lam, 200000)
        rate_req = (1024 + 16) / 2080
        outage = float((0.5 * np.log2(1.0 + g * snr) <= rate_req).mean())
        assert outage == pytest.approx(
            link_erasure_prob(lam, snr, 1024, 16, 2080), abs=0.005)

    def test_erasure_params_decrease_with_snr(self):
        lo = erasure_equivalent_params(_wp(30), 100)
        hi = erasure_equivalent_params(_wp(50), 100)
        assert hi.pe_sd < lo.pe_sd
        assert hi.pe_sr < lo.pe_sr
        assert lo.pe_sd > lo.pe_sr  # longer link fades harder

    def test_sample_gain_positive(self):
        rng = Random(1)
        assert all(sample_gain(3.0, rng) > 0 for _ in range(100))


class TestSic:
    def test_classification(self):
        assert classify_phase2_wireless(SlotOutcome(True, True, True)) \
            == BUFFER1_AND_3
        assert classify_phase2_wireless(SlotOutcome(True, False, True)) == BUFFER1
        assert classify_phase2_wireless(SlotOutcome(False, True, False)) == BUFFER2
        assert classify_phase2_wireless(SlotOutcome(False, False, True)) == DISCARD

    def test_closed_forms_against_monte_carlo(self):
        lam_s, lam_r, snr, chi = 1.0, 2.0, 20.0, 1.0
        rng = np.random.default_rng(3)
        n = 200000
        g_s = rng.exponential(1.0 / lam_s, n)
        g_r = rng.exponential(1.0 / lam_r, n)
        cf = sic_erasure_probs(lam_s, lam_r, snr, chi)
        assert float((g_r * snr > chi * (g_s * snr + 1)).mean()) == \
            pytest.approx(1 - cf["pe_rd_a"], abs=0.005)
        assert float((g_s * snr > chi).mean()) == \
            pytest.approx(1 - cf["pe_sd_a"], abs=0.005)
        assert float((g_s * snr > chi * (g_r * snr + 1)).mean()) == \
            pytest.approx(1 - cf["pe_sd_b"], abs=0.005)
        assert float((g_r * snr > chi).mean()) == \
            pytest.approx(1 - cf["pe_rd_b"], abs=0.005)
        assert float((g_r >= g_s).mean()) == \
            pytest.approx(cf["p_order_a"], abs=0.005)

    def test_outcome_consistency(self):
        rng = Random(4)
        for _ in range(2000):
            out = sic_phase2_outcome(1.0, 1.0, 10.0, 1.0, rng)
            if out.r_decoded_first:
                # S is only decodable after R was cancelled
                assert not (out.decoded_from_s and not out.decoded_from_r)
            else:
                assert not (out.decoded_from_r and not out.decoded_from_s)

    def test_both_decoded_fills_two_buffers(self):
        ch = WirelessChannel(_wp(40), 100)
        assert ch.split_deliveries(BUFFER1_AND_3) == (True, False, True)


class TestApproach1:
    def test_deterministic(self):
        wp = _wp(50)
        a = simulate_approach1(wp, "naive", 32, 20, 5)
        b = simulate_approach1(wp, "naive", 32, 20, 5)
        assert np.array_equal(a.m_values, b.m_values)

    def test_high_snr_approaches_fountain_overhead(self):
        wp = _wp(70)
        batch = simulate_approach1(wp, "direct", 100, 200, 5)
        assert batch.mean == pytest.approx(101.6, rel=0.02)

    def test_netcoded_multiblock_runs(self):
        wp = _wp(40)
        batch = simulate_approach1(wp, "netcoded", 64, 10, 7, n_blocks=4,
                                   check_decoding=True)
        assert batch.m_values.shape == (10, 4)


class TestMacRegion:
    def test_alpha_one_kills_next_stream(self):
        rc, rn = mac_corner_rates(1.0, 0.3, 0.2, 100.0)
        assert rn == 0.0
        assert rc == pytest.approx(capacity(0.5**2 * 100.0))

    def test_alpha_zero_is_relay_only(self):
        rc, rn = mac_corner_rates(0.0, 0.3, 0.2, 100.0)
        assert rc == pytest.approx(capacity(0.2**2 * 100.0))
        assert rn > 0.0

    def test_invalid_alpha(self):
        with pytest.raises(ValueError):
            mac_corner_rates(1.5, 0.3, 0.2, 100.0)

    def test_constraints_and_sum_rate(self):
        rng = Random(6)
        snr = 500.0
        for _ in range(200):
            h_sd = math.sqrt(rng.expovariate(1.0))
            h_rd = math.sqrt(rng.expovariate(2.0))
            prev_sum = -1.0
            for alpha in np.linspace(0.0, 1.0, 21):
                rc, rn = mac_corner_rates(float(alpha), h_sd, h_rd, snr)
                beta_sq = 1.0 - alpha * alpha
                g_cur = alpha * h_sd + h_rd
                assert rc <= capacity(g_cur**2 * snr) + 1e-9
                assert rn <= capacity(beta_sq * h_sd**2 * snr) + 1e-9
                assert rc + rn <= capacity(
                    (g_cur**2 + beta_sq * h_sd**2) * snr) + 1e-9
                assert rc + rn >= prev_sum - 1e-9
                prev_sum = rc + rn

    def test_solve_alpha_default_is_zero(self):
        # the co-phased relay contribution alone meets the relay-only target
        assert solve_alpha_operating_point(0.4, 0.3, 200.0) == 0.0

    def test_solve_alpha_reaches_target(self):
        h_sd, h_rd, snr = 0.8, 0.1, 50.0
        target = capacity(0.25 * snr)
        a = solve_alpha_operating_point(h_sd, h_rd, snr, target_r_cur=target)
        assert 0.0 < a <= 1.0
        assert mac_corner_rates(a, h_sd, h_rd, snr)[0] == \
            pytest.approx(target, abs=1e-6)

    def test_solve_alpha_infeasible(self):
        with pytest.raises(ValueError):
            solve_alpha_operating_point(0.1, 0.1, 1.0, target_r_cur=10.0)


class TestApproach2:
    def test_shapes_and_determinism(self):
        wp = _wp(40)
        a = simulate_approach2(wp, 50, 30, 9)
        b = simulate_approach2(wp, 50, 30, 9)
        assert a.shape == (30,)
        assert np.array_equal(a, b)
        assert a.min() >= 1

    def test_schemes_ordering_low_snr(self):
        wp = _wp(30)
        d = simulate_approach2(wp, 50, 120, 9, scheme="direct")[20:].mean()
        n = simulate_approach2(wp, 50, 120, 9, scheme="naive")[20:].mean()
        c = simulate_approach2(wp, 50, 120, 9, scheme="netcoded")[20:].mean()
        assert c < n < d

    def test_fixed_alpha_policy(self):
        wp = _wp(40)
        slots = simulate_approach2(wp, 50, 30, 9, alpha_policy=0.5)
        assert slots.shape == (30,)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            simulate_approach2(_wp(40), 50, 5, 0, scheme="flooding")
