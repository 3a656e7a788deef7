"""Tests for the packet-level protocol simulator."""

from random import Random

import numpy as np
import pytest

from fcrelay.analysis import ErasureNetworkParams, equivalent_erasures
from fcrelay.simulate import (BUFFER1, BUFFER2, BUFFER3, DISCARD,
                              ErasureChannel, RunawayError, SimConfig,
                              classify_phase2, run_batch, simulate_direct,
                              simulate_naive, simulate_netcoded)

SMALL = ErasureNetworkParams(pe_sd=0.4, pe_sr=0.2, pe_rd=0.2, pe_rr=0.2, K=16)


def test_classify_phase2_truth_table():
    assert classify_phase2(True, True) == DISCARD
    assert classify_phase2(True, False) == BUFFER1
    assert classify_phase2(False, True) == BUFFER2
    assert classify_phase2(False, False) == BUFFER3


def test_split_deliveries():
    ch = ErasureChannel(SMALL)
    assert ch.split_deliveries(BUFFER1) == (True, False, False)
    assert ch.split_deliveries(BUFFER2) == (False, True, False)
    assert ch.split_deliveries(BUFFER3) == (False, False, True)
    assert ch.split_deliveries(DISCARD) == (False, False, False)


class TestDirect:
    def test_lower_bound_and_determinism(self):
        cfg = SimConfig(params=SMALL)
        ms = [simulate_direct(cfg, s) for s in range(40)]
        assert all(m >= SMALL.K for m in ms)
        assert ms == [simulate_direct(cfg, s) for s in range(40)]

    def test_zero_erasure_overhead(self):
        p = ErasureNetworkParams(0.0, 0.0, 0.0, 0.0, K=64)
        cfg = SimConfig(params=p)
        ms = [simulate_direct(cfg, s) for s in range(300)]
        mean = np.mean(ms)
        assert 64.0 <= mean < 67.5  # ~1.6-packet fountain overhead

    def test_payload_verification(self):
        cfg = SimConfig(params=SMALL, m=64, check_decoding=True)
        for s in range(20):
            assert simulate_direct(cfg, s) >= SMALL.K

    def test_runaway(self):
        p = ErasureNetworkParams(0.999, 0.2, 0.2, 0.2, K=16)
        cfg = SimConfig(params=p, runaway_factor=2)
        with pytest.raises(RunawayError):
            simulate_direct(cfg, 0)


class TestNaive:
    def test_record_shape(self):
        cfg = SimConfig(params=SMALL)
        rec = simulate_naive(cfg, 11)
        assert rec.M >= SMALL.K
        if rec.j is not None:
            assert rec.relay in (1, 2)
            assert rec.M > rec.j >= 1

    def test_payload_verification(self):
        cfg = SimConfig(params=SMALL, m=64, check_decoding=True)
        for s in range(20):
            simulate_naive(cfg, s)

    def test_mean_beats_direct(self):
        cfg = SimConfig(params=SMALL)
        direct = np.mean([simulate_direct(cfg, s) for s in range(600)])
        naive = np.mean([simulate_naive(cfg, 10_000 + s).M
                         for s in range(600)])
        assert naive < direct

    def test_two_relays_required(self):
        p = ErasureNetworkParams(0.4, 0.2, 0.2, 0.2, 16, n_relays=3)
        with pytest.raises(ValueError):
            simulate_naive(SimConfig(params=p), 0)


class TestNetcoded:
    def test_one_record_per_block(self):
        cfg = SimConfig(params=SMALL, n_blocks=6)
        recs = simulate_netcoded(cfg, 21)
        assert len(recs) == 6
        assert recs[0].carryover_in == (0, 0, 0)
        for r in recs:
            assert r.carryover_in[0] == 0  # winner relay carries nothing

    def test_carryover_appears(self):
        cfg = SimConfig(params=SMALL, n_blocks=8)
        recs = [r for s in range(20) for r in simulate_netcoded(cfg, s)[1:]]
        assert any(r.carryover_in[1] > 0 for r in recs)
        assert any(r.carryover_in[2] > 0 for r in recs)
        # raw counts can exceed K but useful rank cannot
        for r in recs:
            assert all(rank <= SMALL.K for rank in r.carryover_in_rank)
            assert all(rank <= raw for rank, raw in
                       zip(r.carryover_in_rank, r.carryover_in))

    def test_payload_verification_multiblock(self):
        cfg = SimConfig(params=SMALL, m=64, n_blocks=5, check_decoding=True)
        for s in range(8):
            recs = simulate_netcoded(cfg, s)
            assert len(recs) == 5

    def test_blocks_can_finish_below_k(self):
        cfg = SimConfig(params=SMALL, n_blocks=10)
        ms = [r.M for s in range(40) for r in simulate_netcoded(cfg, s)[2:]]
        assert min(ms) < SMALL.K

    def test_buffer_counts_recorded(self):
        cfg = SimConfig(params=SMALL, n_blocks=1)
        for s in range(30):
            rec = simulate_netcoded(cfg, s)[0]
            if rec.buffer_counts is None:
                continue
            dest = rec.buffer_counts["destination"]
            assert sum(dest.values()) == rec.M - rec.j
            return
        pytest.fail("no phase-two block found in 30 seeds")


def test_phase2_classification_frequencies_rough():
    # quick 4-way check of the slot algebra against the erasure products
    ch = ErasureChannel(SMALL)
    rng = Random(0)
    n = 40000
    counts = {BUFFER1: 0, BUFFER2: 0, BUFFER3: 0, DISCARD: 0}
    for _ in range(n):
        counts[ch.phase2_at_destination(rng)] += 1
    pe_eq, _, _ = equivalent_erasures(SMALL)
    assert counts[BUFFER1] / n == pytest.approx(1 - pe_eq, abs=0.01)
    assert counts[BUFFER3] / n == pytest.approx(
        (1 - SMALL.pe_sd) * (1 - SMALL.pe_rd), abs=0.01)


class TestRunBatch:
    def test_histogram_consistent(self):
        cfg = SimConfig(params=SMALL)
        batch = run_batch("naive", cfg, 50, 7)
        assert sum(batch.histogram.values()) == 50
        assert batch.m_values.shape == (50, 1)
        assert batch.min >= SMALL.K

    def test_netcoded_shape(self):
        cfg = SimConfig(params=SMALL, n_blocks=4)
        batch = run_batch("netcoded", cfg, 12, 7)
        assert batch.m_values.shape == (12, 4)

    def test_deterministic(self):
        cfg = SimConfig(params=SMALL, n_blocks=3)
        a = run_batch("netcoded", cfg, 15, 99)
        b = run_batch("netcoded", cfg, 15, 99)
        assert np.array_equal(a.m_values, b.m_values)

    def test_rejects_bad_args(self):
        cfg = SimConfig(params=SMALL)
        with pytest.raises(ValueError):
            run_batch("naive", cfg, 0, 1)
        with pytest.raises(ValueError):
            run_batch("quantum", cfg, 5, 1)

    def test_runaway_reports_trial(self):
        p = ErasureNetworkParams(0.999, 0.2, 0.2, 0.2, K=16)
        cfg = SimConfig(params=p, runaway_factor=2)
        with pytest.raises(RunawayError) as err:
            run_batch("direct", cfg, 3, 0)
        assert err.value.trial == 0
