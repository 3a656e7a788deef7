"""Rayleigh-fading wireless mappings of the relay protocols.

Approach 1 converts each fading link into an equivalent erasure channel
(with successive interference cancellation during phase two) and reuses
the erasure-protocol simulator.  Approach 2 models the flow of information
bits directly, with analogue network coding (superposition weights alpha /
beta) during phase two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random
from typing import Optional

import numpy as np

from .analysis import ErasureNetworkParams
from .simulate import (BUFFER1, BUFFER2, BUFFER3, DISCARD, BatchResult,
                       RunawayError, SimConfig, classify_phase2, run_batch)

BUFFER1_AND_3 = "buffer1+buffer3"


@dataclass(frozen=True)
class Topology:
    """Node distances in meters; path-loss rate is distance^exponent."""

    d_sd: float = 20.0
    d_sr: float = 10.3
    d_rd: float = 10.3
    d_rr: float = 5.0
    path_loss_exponent: float = 3.0

    def __post_init__(self):
        if min(self.d_sd, self.d_sr, self.d_rd, self.d_rr) <= 0:
            raise ValueError("distances must be positive")

    def rate(self, d: float) -> float:
        return d ** self.path_loss_exponent


@dataclass(frozen=True)
class WirelessParams:
    """Fading rates (of |h|^2), SNR and packet geometry of the network."""

    lambda_sd: float
    lambda_sr: float
    lambda_rd: float
    lambda_rr: float
    snr: float                 # sigma_tx^2 / sigma_n^2, linear
    m: int = 1024
    mu: int = 16
    n: int = 2080              # codeword length in channel uses per packet
    gamma_gap: float = 1.0     # linear SNR-gap penalty, <= 1

    def __post_init__(self):
        if min(self.lambda_sd, self.lambda_sr, self.lambda_rd, self.lambda_rr) <= 0:
            raise ValueError("fading rates must be positive")
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.n < 1:
            raise ValueError("codeword length must be >= 1")
        if not 0.0 < self.gamma_gap <= 1.0:
            raise ValueError("gamma_gap is a linear penalty in (0, 1]")

    @property
    def chi(self) -> float:
        """Outage threshold on |h|^2 * snr: 2^{2(m+mu)/n} - 1."""
        return 2.0 ** (2.0 * (self.m + self.mu) / self.n) - 1.0

    @classmethod
    def from_topology(cls, topo: Topology, snr: float, **kw) -> "WirelessParams":
        return cls(lambda_sd=topo.rate(topo.d_sd), lambda_sr=topo.rate(topo.d_sr),
                   lambda_rd=topo.rate(topo.d_rd), lambda_rr=topo.rate(topo.d_rr),
                   snr=snr, **kw)


def sample_gain(lam: float, rng: Random) -> float:
    """One squared fading magnitude |h|^2 ~ Exp(rate=lam)."""
    if lam <= 0:
        raise ValueError("rate must be positive")
    return rng.expovariate(lam)


def link_erasure_prob(lam: float, snr: float, m: int, mu: int, n: int) -> float:
    """Outage probability of a point-to-point fading link."""
    chi = 2.0 ** (2.0 * (m + mu) / n) - 1.0
    return -math.expm1(-lam * chi / snr)


def erasure_equivalent_params(wp: WirelessParams, K: int,
                              n_relays: int = 2) -> ErasureNetworkParams:
    """Per-link outage probabilities packaged for the erasure machinery."""
    def pe(lam):
        return link_erasure_prob(lam, wp.snr, wp.m, wp.mu, wp.n)
    return ErasureNetworkParams(pe(wp.lambda_sd), pe(wp.lambda_sr),
                                pe(wp.lambda_rd), pe(wp.lambda_rr),
                                K, n_relays)


# ---------------------------------------------------------------------------
# phase-two successive interference cancellation

@dataclass(frozen=True)
class SlotOutcome:
    decoded_from_r: bool
    decoded_from_s: bool
    r_decoded_first: bool


def sic_phase2_outcome(lam_s_link: float, lam_r_link: float, snr: float,
                       chi: float, rng: Random) -> SlotOutcome:
    """Decode outcome of one phase-two slot with both nodes transmitting.

    The stronger link is decoded first with the other treated as noise; the
    weaker one is decodable only after the first was cancelled.
    """
    g_s = rng.expovariate(lam_s_link)
    g_r = rng.expovariate(lam_r_link)
    r_first = g_r >= g_s
    if r_first:
        ok_r = g_r * snr > chi * (g_s * snr + 1.0)
        ok_s = ok_r and g_s * snr > chi
    else:
        ok_s = g_s * snr > chi * (g_r * snr + 1.0)
        ok_r = ok_s and g_r * snr > chi
    return SlotOutcome(ok_r, ok_s, r_first)


def sic_erasure_probs(lam_s: float, lam_r: float, snr: float, chi: float) -> dict:
    """Closed-form SIC erasure probabilities and the decode-order split."""
    pe_rd_a = 1.0 - (lam_s / chi) / (lam_r + lam_s / chi) * math.exp(-lam_r * chi / snr)
    pe_sd_a = -math.expm1(-lam_s * chi / snr)
    pe_sd_b = 1.0 - (lam_r / chi) / (lam_s + lam_r / chi) * math.exp(-lam_s * chi / snr)
    pe_rd_b = -math.expm1(-lam_r * chi / snr)
    return {
        "pe_rd_a": pe_rd_a, "pe_sd_a": pe_sd_a,
        "pe_sd_b": pe_sd_b, "pe_rd_b": pe_rd_b,
        "p_order_a": lam_s / (lam_s + lam_r),
    }


def classify_phase2_wireless(outcome: SlotOutcome) -> str:
    """Buffer target(s) of one SIC slot.

    Unlike the erasure channel, decoding both constituents yields two
    stored packets: the current one and (after digital XOR) the next one.
    """
    if outcome.decoded_from_r and outcome.decoded_from_s:
        return BUFFER1_AND_3
    if outcome.decoded_from_r:
        return BUFFER1
    if outcome.decoded_from_s:
        return BUFFER2
    return DISCARD


class WirelessChannel:
    """Approach-1 channel: outage phase one, SIC phase two."""

    def __init__(self, wp: WirelessParams, K: int, n_relays: int = 2):
        self.wp = wp
        self.params = erasure_equivalent_params(wp, K, n_relays)

    def phase1_arrivals(self, rng: Random):
        p = self.params
        return (rng.random() >= p.pe_sr, rng.random() >= p.pe_sr,
                rng.random() >= p.pe_sd)

    def direct_arrival(self, rng: Random) -> bool:
        return rng.random() >= self.params.pe_sd

    def naive_phase2_arrival(self, rng: Random) -> bool:
        return rng.random() >= self.params.pe_rd

    def phase2_at_destination(self, rng: Random) -> str:
        wp = self.wp
        out = sic_phase2_outcome(wp.lambda_sd, wp.lambda_rd, wp.snr, wp.chi, rng)
        return classify_phase2_wireless(out)

    def phase2_at_idle_relay(self, rng: Random) -> str:
        wp = self.wp
        out = sic_phase2_outcome(wp.lambda_sr, wp.lambda_rr, wp.snr, wp.chi, rng)
        return classify_phase2_wireless(out)

    def split_deliveries(self, target: str) -> tuple:
        if target == BUFFER1_AND_3:
            return (True, False, True)
        return (target == BUFFER1, target == BUFFER2, target == BUFFER3)


def simulate_approach1(wp: WirelessParams, scheme: str, K: int, trials: int,
                       base_seed: int, n_blocks: int = 1,
                       check_decoding: bool = False) -> BatchResult:
    """Monte Carlo of a scheme over the outage-converted wireless network."""
    channel = WirelessChannel(wp, K)
    cfg = SimConfig(channel.params, m=wp.m, mu=wp.mu, n_blocks=n_blocks,
                    check_decoding=check_decoding)
    return run_batch(scheme, cfg, trials, base_seed, channel=channel)


# ---------------------------------------------------------------------------
# Approach 2: capacity flow model with analogue network coding

def capacity(gain_sq_snr: float, gamma_gap: float = 1.0) -> float:
    """Rate in bits per channel use: 0.5 log2(1 + gap * |h|^2 snr)."""
    if gain_sq_snr < 0:
        raise ValueError("effective SNR must be nonnegative")
    return 0.5 * math.log2(1.0 + gamma_gap * gain_sq_snr)


def mac_corner_rates(alpha: float, h_sd_mag: float, h_rd_mag: float,
                     snr: float, gamma_gap: float = 1.0):
    """(R_current, R_next) at the SIC corner decoding the next stream first.

    The source splits its amplitude alpha/beta between the current and next
    block; contributions are co-phased, so the current stream sees combined
    gain alpha*|h_SD| + |h_RD|.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    beta_sq = 1.0 - alpha * alpha
    g_cur = alpha * h_sd_mag + h_rd_mag
    cur_snr = g_cur * g_cur * snr
    next_sinr = beta_sq * h_sd_mag * h_sd_mag * snr / (cur_snr + 1.0)
    return capacity(cur_snr, gamma_gap), capacity(next_sinr, gamma_gap)


def solve_alpha_operating_point(h_sd_mag: float, h_rd_mag: float, snr: float,
                                gamma_gap: float = 1.0,
                                target_r_cur: Optional[float] = None,
                                tol: float = 1e-12) -> float:
    """Smallest alpha whose corner current-block rate reaches the target.

    Defaults to the relay-only rate, i.e. phase-two duration unchanged
    relative to naive relaying; with co-phased gains that target is met
    already at alpha = 0.
    """
    if target_r_cur is None:
        target_r_cur = capacity(h_rd_mag * h_rd_mag * snr, gamma_gap)

    def r_cur(alpha):
        return mac_corner_rates(alpha, h_sd_mag, h_rd_mag, snr, gamma_gap)[0]

    if r_cur(0.0) >= target_r_cur - tol:
        return 0.0
    if r_cur(1.0) < target_r_cur - tol:
        raise ValueError("target current-block rate infeasible even at alpha=1")
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if r_cur(mid) >= target_r_cur:
            hi = mid
        else:
            lo = mid
    return hi


def simulate_approach2(wp: WirelessParams, K: int, blocks: int, seed: int,
                       scheme: str = "netcoded", alpha_policy="auto",
                       runaway_factor: int = 1000) -> np.ndarray:
    """Flow-level simulation; returns slots needed for each block.

    One slot is one packet duration (n channel uses).  Phase one ends when
    the better relay has accumulated K*m bits of the current block; phase
    two credits the destination at the superposition-corner rates, with
    next-block bits carried into the following block (capped at K*m).
    """
    if scheme not in ("direct", "naive", "netcoded"):
        raise ValueError(f"unknown scheme {scheme!r}")
    rng = Random(seed)
    need = float(K * wp.m)
    n = wp.n
    snr = wp.snr
    gap = wp.gamma_gap
    cap_slots = runaway_factor * K

    d_next = 0.0
    r_next = [0.0, 0.0]
    out = np.empty(blocks, dtype=np.int64)
    for b in range(blocks):
        slots = 0
        d_cur = min(d_next, need)
        r_cur_bits = [min(r_next[0], need), min(r_next[1], need)]
        d_next = 0.0
        r_next = [0.0, 0.0]

        if scheme == "direct":
            while d_cur < need:
                slots += 1
                if slots > cap_slots:
                    raise RunawayError(f"approach-2 block {b} exceeded {cap_slots} slots")
                d_cur += capacity(rng.expovariate(wp.lambda_sd) * snr, gap) * n
            out[b] = slots
            continue

        # phase one: source broadcast
        winner = None
        while d_cur < need:
            if max(r_cur_bits) >= need:
                winner = 1 if r_cur_bits[1] >= r_cur_bits[0] else 0
                break
            slots += 1
            if slots > cap_slots:
                raise RunawayError(f"approach-2 block {b} exceeded {cap_slots} slots")
            r_cur_bits[0] += capacity(rng.expovariate(wp.lambda_sr) * snr, gap) * n
            r_cur_bits[1] += capacity(rng.expovariate(wp.lambda_sr) * snr, gap) * n
            d_cur += capacity(rng.expovariate(wp.lambda_sd) * snr, gap) * n
        if winner is None:   # destination finished during phase one
            out[b] = slots
            continue

        # phase two
        idle = 1 - winner
        while d_cur < need:
            slots += 1
            if slots > cap_slots:
                raise RunawayError(f"approach-2 block {b} exceeded {cap_slots} slots")
            h_sd = math.sqrt(rng.expovariate(wp.lambda_sd))
            h_rd = math.sqrt(rng.expovariate(wp.lambda_rd))
            if scheme == "naive":
                d_cur += capacity(h_rd * h_rd * snr, gap) * n
                continue
            if alpha_policy == "auto":
                alpha = solve_alpha_operating_point(h_sd, h_rd, snr, gap)
            else:
                alpha = float(alpha_policy)
            rc, rn = mac_corner_rates(alpha, h_sd, h_rd, snr, gap)
            d_cur += rc * n
            d_next = min(need, d_next + rn * n)
            # next-block stream as seen by the idle relay (co-phased as well)
            h_sr = math.sqrt(rng.expovariate(wp.lambda_sr))
            h_rr = math.sqrt(rng.expovariate(wp.lambda_rr))
            g_int = alpha * h_sr + h_rr
            beta_sq = 1.0 - alpha * alpha
            sinr = beta_sq * h_sr * h_sr * snr / (g_int * g_int * snr + 1.0)
            r_next[idle] = min(need, r_next[idle] + capacity(sinr, gap) * n)
        out[b] = slots
    return out
