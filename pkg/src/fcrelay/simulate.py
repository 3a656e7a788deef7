"""Seeded Monte Carlo simulation of the three transmission protocols.

The hot loop works on raw coefficient integers for speed; with
``check_decoding`` enabled the simulator additionally carries real payloads
end to end and verifies every reported decode bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Optional

import numpy as np

from .analysis import ErasureNetworkParams
from .gf2 import DecoderState, SourceBlock, encode_coeffs

# phase-two buffer targets at a receiving node (Table-style event algebra)
DISCARD = "discard"
BUFFER1 = "buffer1"   # pure current-block packet
BUFFER2 = "buffer2"   # mixed current/next packet
BUFFER3 = "buffer3"   # pure next-block packet


class RunawayError(RuntimeError):
    """A trial exceeded the slot cap (erasure rates too close to one)."""

    def __init__(self, message: str, trial: Optional[int] = None):
        super().__init__(message)
        self.trial = trial


@dataclass
class SimConfig:
    params: ErasureNetworkParams
    m: int = 1024
    mu: int = 16
    n_blocks: int = 1
    check_decoding: bool = False
    runaway_factor: int = 100

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")

    @property
    def slot_cap(self) -> int:
        return self.runaway_factor * self.params.K


@dataclass
class TrialRecord:
    block_index: int
    M: int
    j: Optional[int]                 # phase-one duration; None if no phase two
    relay: Optional[int]             # 1 or 2 (label before relabeling), None
    carryover_in: tuple = (0, 0, 0)  # raw packet counts (n1, n2, n3)
    carryover_in_rank: tuple = (0, 0, 0)
    r2_decoded: Optional[bool] = None
    buffer_counts: Optional[dict] = None


def classify_phase2(s_erased: bool, r_erased: bool) -> str:
    """Buffer target of one superposed phase-two slot at a receiver."""
    if s_erased and r_erased:
        return DISCARD
    if s_erased:
        return BUFFER1     # only the relay's current-block packet got through
    if r_erased:
        return BUFFER2     # only the source's network-coded packet
    return BUFFER3         # superposition cancels the shared current code


class ErasureChannel:
    """Ideal per-packet erasure links with independent per-slot draws."""

    def __init__(self, params: ErasureNetworkParams):
        self.params = params

    def phase1_arrivals(self, rng: Random):
        p = self.params
        return (rng.random() >= p.pe_sr, rng.random() >= p.pe_sr,
                rng.random() >= p.pe_sd)

    def direct_arrival(self, rng: Random) -> bool:
        return rng.random() >= self.params.pe_sd

    def naive_phase2_arrival(self, rng: Random) -> bool:
        return rng.random() >= self.params.pe_rd

    def phase2_at_destination(self, rng: Random) -> str:
        p = self.params
        return classify_phase2(rng.random() < p.pe_sd, rng.random() < p.pe_rd)

    def phase2_at_idle_relay(self, rng: Random) -> str:
        p = self.params
        return classify_phase2(rng.random() < p.pe_sr, rng.random() < p.pe_rr)

    def split_deliveries(self, target: str) -> tuple:
        """(current_arrives, mixed_arrives, next_arrives) for one target.

        Over an erasure channel a slot yields at most one stored packet.
        """
        return (target == BUFFER1, target == BUFFER2, target == BUFFER3)


# ---------------------------------------------------------------------------

def simulate_direct(cfg: SimConfig, seed: int,
                    channel=None) -> int:
    """Transmission count of one direct source-to-destination block."""
    params = cfg.params
    channel = channel or ErasureChannel(params)
    rng = Random(seed)
    K = params.K
    block = SourceBlock.random(K, cfg.m, rng) if cfg.check_decoding else None
    dec = DecoderState(K, cfg.m)
    cap = cfg.slot_cap
    M = 0
    while not dec.decodable:
        M += 1
        if M > cap:
            raise RunawayError(f"direct trial exceeded {cap} slots")
        coeffs = encode_coeffs(K, rng)
        if channel.direct_arrival(rng):
            payload = block.combine(coeffs) if block is not None else 0
            dec.absorb(coeffs, payload)
    if block is not None and dec.decode() != list(block.packets):
        raise AssertionError("decoded block does not match the source")
    return M


def simulate_naive(cfg: SimConfig, seed: int, channel=None) -> TrialRecord:
    """One block of the two-phase naive relaying protocol (two relays)."""
    params = cfg.params
    if params.n_relays != 2:
        raise ValueError("simulator is built for two relays")
    channel = channel or ErasureChannel(params)
    rng = Random(seed)
    K = params.K
    block = SourceBlock.random(K, cfg.m, rng) if cfg.check_decoding else None
    d_dec = DecoderState(K, cfg.m)
    r_decs = [DecoderState(K, cfg.m), DecoderState(K, cfg.m)]
    cap = cfg.slot_cap
    M = 0

    # phase one: source broadcast until some relay decodes (or D does)
    j = None
    relay = None
    while j is None:
        M += 1
        if M > cap:
            raise RunawayError(f"naive trial exceeded {cap} slots")
        coeffs = encode_coeffs(K, rng)
        payload = block.combine(coeffs) if block is not None else 0
        r1_ok, r2_ok, d_ok = channel.phase1_arrivals(rng)
        if d_ok:
            d_dec.absorb(coeffs, payload)
        if r1_ok:
            r_decs[0].absorb(coeffs, payload)
        if r2_ok:
            r_decs[1].absorb(coeffs, payload)
        if d_dec.decodable:          # destination wins a same-slot tie
            _verify(d_dec, block)
            return TrialRecord(0, M, None, None)
        if r_decs[1].decodable:      # simultaneous relay decodes go to R2
            j, relay = M, 2
        elif r_decs[0].decodable:
            j, relay = M, 1

    # phase two: the successful relay sends fresh current-block packets
    while True:
        M += 1
        if M > cap:
            raise RunawayError(f"naive trial exceeded {cap} slots")
        coeffs = encode_coeffs(K, rng)
        if channel.naive_phase2_arrival(rng):
            payload = block.combine(coeffs) if block is not None else 0
            d_dec.absorb(coeffs, payload)
            if d_dec.decodable:
                _verify(d_dec, block)
                return TrialRecord(0, M, j, relay)


def _verify(dec: DecoderState, block: Optional[SourceBlock]):
    if block is not None and dec.decode() != list(block.packets):
        raise AssertionError("decoded block does not match the source")


class _NodeBuffers:
    """Phase-two receive state of D or of the idle relay for one block."""

    __slots__ = ("cur_dec", "next_dec", "mixed", "n_next_raw", "counts")

    def __init__(self, cur_dec: DecoderState, next_dec: DecoderState):
        self.cur_dec = cur_dec
        self.next_dec = next_dec
        self.mixed = []          # (cur_coeffs, next_coeffs, payload)
        self.n_next_raw = 0      # raw next-block packet count (buffer 3)
        self.counts = {BUFFER1: 0, BUFFER2: 0, BUFFER3: 0, DISCARD: 0}

    def receive(self, target: str, v: int, w: int, pay_cur: int, pay_mixed: int,
                pay_next: int, channel) -> bool:
        """Store one classified slot; True iff a current packet arrived."""
        self.counts[target] = self.counts.get(target, 0) + 1
        got_cur, got_mixed, got_next = channel.split_deliveries(target)
        if got_cur:
            self.cur_dec.absorb(v, pay_cur)
        if got_mixed:
            self.mixed.append((v, w, pay_mixed))
        if got_next:
            self.next_dec.absorb(w, pay_next)
            self.n_next_raw += 1
        return got_cur

    def settle(self, decoded_block: Optional[SourceBlock], decoded: bool):
        """Fold mixed packets into the next-block decoder after a decode."""
        if not decoded:
            self.mixed.clear()
            return
        for v, w, pay in self.mixed:
            if decoded_block is not None:
                pay ^= decoded_block.combine(v)
            self.next_dec.absorb(w, pay)
            self.n_next_raw += 1
        self.mixed.clear()


def simulate_netcoded(cfg: SimConfig, seed: int, channel=None) -> list:
    """Multi-block network-coded protocol; one TrialRecord per block."""
    params = cfg.params
    if params.n_relays != 2:
        raise ValueError("simulator is built for two relays")
    channel = channel or ErasureChannel(params)
    rng = Random(seed)
    K = params.K
    check = cfg.check_decoding
    cap = cfg.slot_cap

    # carried next-block state entering the upcoming block, per role label
    d_carry = DecoderState(K, cfg.m)
    r_carry = [DecoderState(K, cfg.m), DecoderState(K, cfg.m)]
    d_raw, r_raw = 0, [0, 0]
    next_block = SourceBlock.random(K, cfg.m, rng, 0) if check else None

    records = []
    for b in range(cfg.n_blocks):
        block = next_block
        next_block = SourceBlock.random(K, cfg.m, rng, b + 1) if check else None
        carry_in = (r_raw[0], r_raw[1], d_raw)
        carry_rank = (r_carry[0].rank, r_carry[1].rank, d_carry.rank)

        d_dec, r_decs = d_carry, r_carry
        M = 0
        j = None
        relay = None
        record = None

        if d_dec.decodable:
            _verify(d_dec, block)
            record = TrialRecord(b, 0, None, None, carry_in, carry_rank)
        elif r_decs[1].decodable:
            j, relay = 0, 2
        elif r_decs[0].decodable:
            j, relay = 0, 1

        # phase one
        while record is None and j is None:
            M += 1
            if M > cap:
                raise RunawayError(f"netcoded block {b} exceeded {cap} slots")
            coeffs = encode_coeffs(K, rng)
            payload = block.combine(coeffs) if check else 0
            r1_ok, r2_ok, d_ok = channel.phase1_arrivals(rng)
            if d_ok:
                d_dec.absorb(coeffs, payload)
            if r1_ok:
                r_decs[0].absorb(coeffs, payload)
            if r2_ok:
                r_decs[1].absorb(coeffs, payload)
            if d_dec.decodable:
                _verify(d_dec, block)
                record = TrialRecord(b, M, None, None, carry_in, carry_rank)
            elif r_decs[1].decodable:
                j, relay = M, 2
            elif r_decs[0].decodable:
                j, relay = M, 1

        if record is not None:
            # no phase two: nothing was sent about the next block
            records.append(record)
            d_carry = DecoderState(K, cfg.m)
            r_carry = [DecoderState(K, cfg.m), DecoderState(K, cfg.m)]
            d_raw, r_raw = 0, [0, 0]
            continue

        # phase two: successful relay + source transmit simultaneously
        idle = 2 - relay + 1  # the other relay's label (1 or 2)
        dest = _NodeBuffers(d_dec, DecoderState(K, cfg.m))
        idle_buf = _NodeBuffers(r_decs[idle - 1], DecoderState(K, cfg.m))
        while True:
            M += 1
            if M > cap:
                raise RunawayError(f"netcoded block {b} exceeded {cap} slots")
            v = encode_coeffs(K, rng)   # shared current-block code
            w = encode_coeffs(K, rng)   # source's next-block code
            if check:
                pay_cur = block.combine(v)
                pay_next = next_block.combine(w)
                pay_mixed = pay_cur ^ pay_next
            else:
                pay_cur = pay_next = pay_mixed = 0
            idle_buf.receive(channel.phase2_at_idle_relay(rng), v, w,
                             pay_cur, pay_mixed, pay_next, channel)
            got_cur = dest.receive(channel.phase2_at_destination(rng), v, w,
                                   pay_cur, pay_mixed, pay_next, channel)
            if got_cur and d_dec.decodable:
                break

        _verify(d_dec, block)
        r2_decoded = idle_buf.cur_dec.decodable
        dest.settle(block if check else None, True)
        idle_buf.settle(block if check else None, r2_decoded)
        records.append(TrialRecord(
            b, M, j, relay, carry_in, carry_rank, r2_decoded,
            {"destination": dest.counts, "idle_relay": idle_buf.counts}))

        # relabel: the successful relay becomes R1 of the next block
        d_carry = dest.next_dec
        d_raw = dest.n_next_raw
        r_carry = [DecoderState(K, cfg.m), idle_buf.next_dec]
        r_raw = [0, idle_buf.n_next_raw]

    return records


@dataclass
class BatchResult:
    scheme: str
    m_values: np.ndarray          # shape (trials, n_blocks)
    histogram: dict
    mean: float
    variance: float
    min: int
    max: int
    records: Optional[list] = None

    @property
    def trials(self) -> int:
        return self.m_values.shape[0]


def run_batch(scheme: str, cfg: SimConfig, trials: int, base_seed: int,
              channel=None, store_records: bool = False) -> BatchResult:
    """Run independent trials with per-trial seeds base_seed + t."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_blocks = cfg.n_blocks if scheme == "netcoded" else 1
    m_values = np.empty((trials, n_blocks), dtype=np.int64)
    records = [] if store_records else None
    for t in range(trials):
        seed = base_seed + t
        try:
            if scheme == "direct":
                m_values[t, 0] = simulate_direct(cfg, seed, channel)
            elif scheme == "naive":
                rec = simulate_naive(cfg, seed, channel)
                m_values[t, 0] = rec.M
                if store_records:
                    records.append(rec)
            elif scheme == "netcoded":
                recs = simulate_netcoded(cfg, seed, channel)
                m_values[t, :] = [r.M for r in recs]
                if store_records:
                    records.append(recs)
            else:
                raise ValueError(f"unknown scheme {scheme!r}")
        except RunawayError as err:
            raise RunawayError(f"{err} (trial {t})", trial=t) from None
    flat = m_values.ravel()
    values, counts = np.unique(flat, return_counts=True)
    histogram = {int(v): int(c) for v, c in zip(values, counts)}
    return BatchResult(scheme, m_values, histogram, float(flat.mean()),
                       float(flat.var()), int(flat.min()), int(flat.max()),
                       records)
