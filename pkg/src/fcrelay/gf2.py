"""Random linear fountain primitives over GF(2), using int bitsets.

Bit i of a coefficient vector selects source packet i; payloads are m-bit
integers.  All combining is bitwise XOR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from random import Random
from typing import Optional


def degree_pmf(K: int, d: int) -> float:
    """Probability that a coded packet combines exactly d source packets.

    Zero at d=0, C(K,d)/(2^K - 1) otherwise.
    """
    if K < 1:
        raise ValueError("block length K must be >= 1")
    if d < 0 or d > K:
        raise ValueError(f"degree {d} outside [0, {K}]")
    if d == 0:
        return 0.0
    # math.comb is exact; the ratio can overflow floats for large K, so go
    # through logs when needed.
    if K <= 60:
        return math.comb(K, d) / (2**K - 1)
    return math.exp(math.lgamma(K + 1) - math.lgamma(d + 1)
                    - math.lgamma(K - d + 1) - K * math.log(2.0))


def encode_coeffs(K: int, rng: Random) -> int:
    """Draw a uniform K-bit coefficient vector (each coefficient a fair bit)."""
    return rng.getrandbits(K)


@dataclass(frozen=True)
class SourceBlock:
    """A block of K source packets, each an m-bit integer."""

    packets: tuple
    m: int
    block_index: int = 0

    def __post_init__(self):
        if not self.packets:
            raise ValueError("block must contain at least one packet")
        limit = 1 << self.m
        for p in self.packets:
            if not (0 <= p < limit):
                raise ValueError("packet wider than m bits")

    @property
    def K(self) -> int:
        return len(self.packets)

    def combine(self, coeffs: int) -> int:
        """XOR of the source packets selected by coeffs."""
        out = 0
        pkts = self.packets
        c = coeffs
        while c:
            low = c & -c
            out ^= pkts[low.bit_length() - 1]
            c ^= low
        return out

    @classmethod
    def random(cls, K: int, m: int, rng: Random, block_index: int = 0) -> "SourceBlock":
        return cls(tuple(rng.getrandbits(m) for _ in range(K)), m, block_index)


@dataclass(frozen=True)
class CodedPacket:
    """A coded packet with explicit coefficient metadata.

    ``coeffs_current`` is the contribution of block ``block_index``;
    ``coeffs_next`` that of block ``block_index + 1``.  A packet carrying
    both is a network-coded (mixed) packet.  ``h1``/``h2`` are the header
    occupancy flags for the source and relay fields.
    """

    K: int
    m: int
    payload: int
    coeffs_current: Optional[int] = None
    coeffs_next: Optional[int] = None
    block_index: int = 0
    h1: bool = False
    h2: bool = False

    @property
    def is_mixed(self) -> bool:
        return self.coeffs_current is not None and self.coeffs_next is not None

    @property
    def is_current_only(self) -> bool:
        return self.coeffs_current is not None and self.coeffs_next is None

    @property
    def is_next_only(self) -> bool:
        return self.coeffs_current is None and self.coeffs_next is not None

    def promote(self) -> "CodedPacket":
        """Re-index a pure next-block packet as a current packet of block i+1."""
        if not self.is_next_only:
            raise ValueError("only a pure next-block packet can be promoted")
        return replace(self, coeffs_current=self.coeffs_next, coeffs_next=None,
                       block_index=self.block_index + 1)


def encode(block: SourceBlock, rng: Random, sender: str = "source",
           position: str = "current") -> CodedPacket:
    """Generate one random-linear coded packet from ``block``.

    Deterministic given the rng state.  ``position="next"`` produces a
    packet whose coefficients sit in the next-block slot (as transmitted
    by the source about block i+1).
    """
    coeffs = encode_coeffs(block.K, rng)
    payload = block.combine(coeffs)
    h1 = sender == "source"
    h2 = sender == "relay"
    if position == "current":
        return CodedPacket(block.K, block.m, payload, coeffs_current=coeffs,
                           block_index=block.block_index, h1=h1, h2=h2)
    if position == "next":
        return CodedPacket(block.K, block.m, payload, coeffs_next=coeffs,
                           block_index=block.block_index - 1, h1=h1, h2=h2)
    raise ValueError(f"unknown position {position!r}")


def network_code(pkt_current: CodedPacket, pkt_next: CodedPacket) -> CodedPacket:
    """XOR a current-block packet with a next-block packet (source side)."""
    if pkt_current.m != pkt_next.m:
        raise ValueError("payload lengths differ")
    if not pkt_current.is_current_only or not pkt_next.is_next_only:
        raise ValueError("operands must be pure current / pure next packets")
    return CodedPacket(pkt_current.K, pkt_current.m,
                       pkt_current.payload ^ pkt_next.payload,
                       coeffs_current=pkt_current.coeffs_current,
                       coeffs_next=pkt_next.coeffs_next,
                       block_index=pkt_current.block_index,
                       h1=True, h2=False)


def _merge_slot(a: Optional[int], b: Optional[int]) -> Optional[int]:
    # XOR of the present contributions; two identical contributions cancel.
    if a is None:
        return b
    if b is None:
        return a
    x = a ^ b
    return None if x == 0 else x


def superpose(sent_by_s: Optional[CodedPacket],
              sent_by_r: Optional[CodedPacket]) -> Optional[CodedPacket]:
    """Bitwise XOR of the unerased constituents of one slot.

    ``None`` models an erased constituent.  When the source's network-coded
    packet meets the relay's identical current-block packet, the current
    contribution cancels and a pure next-block packet remains.
    """
    if sent_by_s is None and sent_by_r is None:
        return None
    if sent_by_s is None:
        return sent_by_r
    if sent_by_r is None:
        return sent_by_s
    if sent_by_s.m != sent_by_r.m:
        raise ValueError("payload lengths differ")
    return CodedPacket(
        sent_by_s.K, sent_by_s.m,
        sent_by_s.payload ^ sent_by_r.payload,
        coeffs_current=_merge_slot(sent_by_s.coeffs_current, sent_by_r.coeffs_current),
        coeffs_next=_merge_slot(sent_by_s.coeffs_next, sent_by_r.coeffs_next),
        block_index=sent_by_s.block_index,
        h1=sent_by_s.h1 or sent_by_r.h1,
        h2=sent_by_s.h2 or sent_by_r.h2,
    )


def strip_known(mixed: CodedPacket, decoded_block: SourceBlock) -> CodedPacket:
    """Remove the decoded current-block contribution from a mixed packet."""
    if not mixed.is_mixed:
        raise ValueError("packet carries no mixed contribution")
    if decoded_block.block_index != mixed.block_index:
        raise ValueError("decoded block index does not match packet")
    payload = mixed.payload ^ decoded_block.combine(mixed.coeffs_current)
    return replace(mixed, payload=payload, coeffs_current=None)


class DecoderState:
    """Incremental GF(2) rank tracker with companion payloads.

    Rows are kept in forward-eliminated form keyed by pivot (highest set
    bit); decoding back-substitutes once rank reaches K.
    """

    __slots__ = ("K", "m", "_rows")

    def __init__(self, K: int, m: int = 0):
        self.K = K
        self.m = m
        self._rows = {}

    @property
    def rank(self) -> int:
        return len(self._rows)

    @property
    def decodable(self) -> bool:
        return len(self._rows) == self.K

    def absorb(self, coeffs: int, payload: int = 0) -> bool:
        """Fold one received packet in; True iff the rank increased."""
        rows = self._rows
        c = coeffs
        p = payload
        while c:
            piv = c.bit_length() - 1
            row = rows.get(piv)
            if row is None:
                rows[piv] = (c, p)
                return True
            c ^= row[0]
            p ^= row[1]
        return False

    def absorb_packet(self, pkt: CodedPacket) -> bool:
        if not pkt.is_current_only:
            raise ValueError("decoder absorbs pure current-block packets")
        return self.absorb(pkt.coeffs_current, pkt.payload)

    def decode(self) -> Optional[list]:
        """The K source packets if rank == K, else None."""
        if len(self._rows) != self.K:
            return None
        # Rows with smaller pivots are unit vectors once processed, so
        # clearing the sub-pivot bits in ascending order yields the identity.
        reduced = {}
        for piv in sorted(self._rows):
            c, p = self._rows[piv]
            rest = c ^ (1 << piv)
            while rest:
                low = rest & -rest
                rest ^= low
                p ^= reduced[low.bit_length() - 1]
            reduced[piv] = p
        return [reduced[k] for k in range(self.K)]

    def copy(self) -> "DecoderState":
        other = DecoderState(self.K, self.m)
        other._rows = dict(self._rows)
        return other
