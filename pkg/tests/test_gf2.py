"""Tests for the GF(2) fountain primitives."""

import math
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcrelay.gf2 import (CodedPacket, DecoderState, SourceBlock, degree_pmf,
                         encode, encode_coeffs, network_code, strip_known,
                         superpose)


class TestDegreePmf:
    def test_zero_degree_impossible(self):
        assert degree_pmf(10, 0) == 0.0

    def test_small_values_exact(self):
        # K=3: 7 nonzero vectors, C(3,d) of each degree
        assert degree_pmf(3, 1) == pytest.approx(3 / 7)
        assert degree_pmf(3, 2) == pytest.approx(3 / 7)
        assert degree_pmf(3, 3) == pytest.approx(1 / 7)

    @given(st.integers(1, 40))
    def test_sums_to_one(self, K):
        total = sum(degree_pmf(K, d) for d in range(K + 1))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_large_k_no_overflow(self):
        v = degree_pmf(1030, 515)
        assert 0.0 < v < 1.0

    def test_bad_args(self):
        with pytest.raises(ValueError):
            degree_pmf(0, 0)
        with pytest.raises(ValueError):
            degree_pmf(5, 6)


class TestCoeffs:
    def test_range(self):
        rng = Random(0)
        for _ in range(100):
            c = encode_coeffs(12, rng)
            assert 0 <= c < 1 << 12

    def test_empirical_degree_matches_pmf(self):
        # conditioned on being nonzero, popcounts should follow degree_pmf
        rng = Random(1)
        K, n = 6, 20000
        counts = [0] * (K + 1)
        for _ in range(n):
            counts[bin(encode_coeffs(K, rng)).count("1")] += 1
        nonzero = n - counts[0]
        for d in range(1, K + 1):
            expect = degree_pmf(K, d)
            assert counts[d] / nonzero == pytest.approx(expect, abs=0.02)


class TestSourceBlock:
    def test_combine_is_xor_of_selected(self):
        blk = SourceBlock((0b0001, 0b0010, 0b0100), m=4)
        assert blk.combine(0b101) == 0b0101
        assert blk.combine(0) == 0

    def test_rejects_wide_packet(self):
        with pytest.raises(ValueError):
            SourceBlock((1 << 8,), m=8)


class TestPacketAlgebra:
    def _pair(self, rng):
        cur = SourceBlock.random(5, 16, rng, block_index=0)
        nxt = SourceBlock.random(5, 16, rng, block_index=1)
        pc = encode(cur, rng)
        pn = encode(nxt, rng, position="next")
        return cur, nxt, pc, pn

    def test_network_code_then_cancel(self):
        rng = Random(7)
        cur, nxt, pc, pn = self._pair(rng)
        mixed = network_code(pc, pn)
        assert mixed.is_mixed
        # relay repeats the identical current packet; superposition cancels it
        relay_pkt = CodedPacket(5, 16, pc.payload, coeffs_current=pc.coeffs_current,
                                h2=True)
        out = superpose(mixed, relay_pkt)
        assert out.is_next_only
        assert out.coeffs_next == pn.coeffs_next
        assert out.payload == pn.payload

    def test_superpose_erasures(self):
        rng = Random(8)
        _, _, pc, pn = self._pair(rng)
        assert superpose(None, None) is None
        assert superpose(pc, None) is pc
        assert superpose(None, pn) is pn

    def test_strip_known(self):
        rng = Random(9)
        cur, nxt, pc, pn = self._pair(rng)
        mixed = network_code(pc, pn)
        stripped = strip_known(mixed, cur)
        assert stripped.is_next_only
        assert stripped.payload == pn.payload

    def test_promote(self):
        rng = Random(10)
        _, nxt, pc, pn = self._pair(rng)
        p = pn.promote()
        assert p.is_current_only and p.block_index == pn.block_index + 1
        with pytest.raises(ValueError):
            pc.promote()


class TestDecoder:
    def test_rank_monotone_and_bounded(self):
        rng = Random(2)
        dec = DecoderState(8)
        prev = 0
        for _ in range(50):
            dec.absorb(encode_coeffs(8, rng))
            assert prev <= dec.rank <= 8
            prev = dec.rank

    def test_zero_vector_never_raises_rank(self):
        dec = DecoderState(4)
        assert not dec.absorb(0)
        assert dec.rank == 0

    def test_duplicate_is_redundant(self):
        dec = DecoderState(4)
        assert dec.absorb(0b1010)
        assert not dec.absorb(0b1010)
        assert dec.rank == 1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 12), st.randoms(use_true_random=False))
    def test_round_trip(self, K, rnd):
        rng = Random(rnd.randrange(2**32))
        blk = SourceBlock.random(K, 12, rng)
        dec = DecoderState(K, 12)
        guard = 0
        while not dec.decodable:
            guard += 1
            assert guard < 40 * K + 200
            c = encode_coeffs(K, rng)
            dec.absorb(c, blk.combine(c))
        assert dec.decode() == list(blk.packets)

    def test_decode_none_until_full_rank(self):
        dec = DecoderState(3)
        dec.absorb(0b001)
        assert dec.decode() is None

    def test_copy_is_independent(self):
        dec = DecoderState(4)
        dec.absorb(0b0011)
        cp = dec.copy()
        cp.absorb(0b0101)
        assert dec.rank == 1 and cp.rank == 2

    def test_identity_basis(self):
        dec = DecoderState(4, 8)
        payloads = [11, 22, 33, 44]
        for i, p in enumerate(payloads):
            dec.absorb(1 << i, p)
        assert dec.decode() == payloads
