"""Closed-form transmission-count distributions for the three schemes.

Everything here is a pure function of the channel parameters.  Infinite
sums over the transmission count M are truncated adaptively; the residual
mass is tracked explicitly in :class:`TransmissionPdf`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats

_EPS_WEIGHT = 1e-15  # per-term pruning threshold inside double sums


class TruncationError(RuntimeError):
    """Raised when a pdf cannot be truncated to the requested tolerance."""

    def __init__(self, message: str, tail_mass: float):
        super().__init__(message)
        self.tail_mass = tail_mass


@dataclass(frozen=True)
class ErasureNetworkParams:
    """Per-link erasure probabilities and block length of the network."""

    pe_sd: float
    pe_sr: float
    pe_rd: float
    pe_rr: float
    K: int
    n_relays: int = 2

    def __post_init__(self):
        for name in ("pe_sd", "pe_sr", "pe_rd", "pe_rr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.n_relays < 1:
            raise ValueError("need at least one relay")


@dataclass(frozen=True)
class CarryoverState:
    """Next-block packet counts held at R1, R2 and D when a block starts."""

    n1: int = 0
    n2: int = 0
    n3: int = 0

    def __post_init__(self):
        if min(self.n1, self.n2, self.n3) < 0:
            raise ValueError("carryover counts must be nonnegative")

    def as_tuple(self):
        return (self.n1, self.n2, self.n3)


@dataclass(frozen=True)
class TransmissionPdf:
    """Truncated distribution of the transmission count M.

    ``probs[M]`` is the probability of finishing after exactly M slots,
    normalized by ``normalizer``; ``tail_mass`` is the residual probability
    beyond the truncation point.
    """

    probs: np.ndarray
    tail_mass: float
    normalizer: float

    @property
    def m_max(self) -> int:
        return len(self.probs) - 1

    def prob(self, M: int) -> float:
        return float(self.probs[M]) if 0 <= M < len(self.probs) else 0.0

    def normalized(self) -> np.ndarray:
        s = self.probs.sum()
        return self.probs / s

    def survival_from(self, M: int) -> float:
        """Pr[count >= M], counting the truncated tail as mass beyond m_max."""
        if M <= 0:
            return 1.0
        return float(max(0.0, 1.0 - self.probs[:M].sum()))


def pdf_stats(pdf: TransmissionPdf):
    """(mean, variance, tail_mass) over the truncated support."""
    p = pdf.normalized()
    m = np.arange(len(p))
    mean = float(p @ m)
    var = float(p @ (m - mean) ** 2)
    return mean, var, pdf.tail_mass


# ---------------------------------------------------------------------------
# rank / decode probabilities

def binomial_pmf(M: int, pe: float, N: int) -> float:
    """Probability of N unerased packets out of M, per-slot erasure pe."""
    if N < 0 or N > M:
        raise ValueError(f"N={N} outside [0, {M}]")
    return float(stats.binom.pmf(N, M, 1.0 - pe))


def _binom_row(n: int, pe: float) -> np.ndarray:
    """pmf of #unerased out of n slots, as an array of length n+1."""
    return stats.binom.pmf(np.arange(n + 1), n, 1.0 - pe)


@lru_cache(maxsize=None)
def full_rank_cdf(K: int, N: int) -> float:
    """Probability that a random binary K x N matrix has rank K."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if N < K:
        return 0.0
    # prod_{i=0}^{K-1} (1 - 2^{i-N}) evaluated in log space
    acc = 0.0
    for i in range(K):
        acc += math.log1p(-(2.0 ** (i - N)))
    return math.exp(acc)


def decode_pmf(K: int, N: int) -> float:
    """Probability that decoding first succeeds at the N-th received packet."""
    if N < 0:
        return 0.0
    prev = full_rank_cdf(K, N - 1) if N >= 1 else 0.0
    return full_rank_cdf(K, N) - prev


def _cdf_vec(K: int, n_max: int) -> np.ndarray:
    return np.array([full_rank_cdf(K, N) for N in range(n_max + 1)])


def _fnp_vec(K: int, n_p: int, n_max: int) -> np.ndarray:
    """f_{n_p}(N) for N = 0..n_max: F(n_p) at 0, else F(N+n_p) - F(N+n_p-1)."""
    F = np.array([full_rank_cdf(K, N + n_p) for N in range(-1, n_max + 1)])
    out = np.diff(F)
    out[0] = F[1]  # N = 0 case is the cdf itself
    return out


def aux_fnp(K: int, n_p: int, N: int) -> float:
    """Decode pmf of a receiver that already holds n_p packets."""
    if n_p < 0 or N < 0:
        raise ValueError("n_p and N must be nonnegative")
    if N == 0:
        return full_rank_cdf(K, n_p)
    return full_rank_cdf(K, N + n_p) - full_rank_cdf(K, N + n_p - 1)


# ---------------------------------------------------------------------------
# point-to-point transmission pdfs

def _grow_limits(K: int, pe: float, m_max: Optional[int]):
    if pe >= 1.0:
        raise ValueError("erasure probability must be < 1 for a proper pdf")
    if m_max is not None:
        return m_max, m_max
    # start past the bulk of the distribution, allow growth to a hard cap
    guess = max(4 * K, int((K + 12) / (1.0 - pe)) + 64)
    return guess, max(200 * K, 4 * guess)


def aux_g_pdf(K: int, n_p: int, pe: float, m_max: Optional[int] = None,
              tol: float = 1e-9) -> TransmissionPdf:
    """Point-to-point decode-time pdf given n_p packets already held.

    g(0) covers immediate decoding from the held packets; for M > 0 the
    M-th slot must be unerased and complete the rank.
    """
    limit, cap = _grow_limits(K, pe, m_max)
    while True:
        fnp = _fnp_vec(K, n_p, limit + 1)
        unnorm = np.zeros(limit + 1)
        unnorm[0] = fnp[0]
        acc = unnorm[0]
        for M in range(1, limit + 1):
            row = _binom_row(M - 1, pe)
            unnorm[M] = (1.0 - pe) * float(row @ fnp[1:M + 1])
            acc += unnorm[M]
            if m_max is None and 1.0 - acc < tol * 0.1 and unnorm[M] < tol * 0.01:
                unnorm = unnorm[:M + 1]
                break
        tail = max(0.0, 1.0 - unnorm.sum())
        if tail <= tol or (m_max is not None) or limit >= cap:
            break
        limit = min(cap, limit * 2)
    if tail > tol:
        raise TruncationError(
            f"tail mass {tail:.3e} above tolerance {tol:.1e} at M_max={limit}",
            tail)
    omega = unnorm.sum() + tail
    return TransmissionPdf(unnorm / omega, tail, omega)


def aux_g(K: int, n_p: int, pe: float, M: int, tol: float = 1e-9) -> float:
    """Single value g_{n_p, pe}(M)."""
    pdf = aux_g_pdf(K, n_p, pe, tol=tol)
    return pdf.prob(M)


def direct_pdf(K: int, pe: float, m_max: Optional[int] = None,
               tol: float = 1e-9) -> TransmissionPdf:
    """Transmission-count pdf of direct source-to-destination delivery."""
    return aux_g_pdf(K, 0, pe, m_max=m_max, tol=tol)


def relay_any_decode_pmf(p1: TransmissionPdf, n_relays: int) -> TransmissionPdf:
    """pmf of the first decode time among n_relays i.i.d. relays."""
    p = p1.probs
    # survival strictly beyond j, counting the truncated tail
    surv_gt = (1.0 - np.cumsum(p)) + p1.tail_mass / max(p1.normalizer, 1e-300)
    surv_gt = np.clip(surv_gt, 0.0, 1.0)
    q = np.zeros_like(p)
    for r in range(1, n_relays + 1):
        q += math.comb(n_relays, r) * p**r * surv_gt**(n_relays - r)
    tail = max(0.0, 1.0 - q.sum())
    return TransmissionPdf(q, tail, 1.0)


def _bernoulli_step(w: np.ndarray, p_succ: float) -> np.ndarray:
    out = np.empty(len(w) + 1)
    out[0] = w[0] * (1.0 - p_succ)
    out[1:-1] = w[1:] * (1.0 - p_succ) + w[:-1] * p_succ
    out[-1] = w[-1] * p_succ
    return out


def naive_pdf(params: ErasureNetworkParams, m_max: Optional[int] = None,
              tol: float = 1e-9) -> TransmissionPdf:
    """Transmission-count pdf of the two-phase naive relaying scheme."""
    K = params.K
    worst = max(params.pe_sd, params.pe_sr)
    limit, cap = _grow_limits(K, worst, m_max)
    while True:
        p1_sd = direct_pdf(K, params.pe_sd, m_max=limit, tol=math.inf)
        p1_sr = direct_pdf(K, params.pe_sr, m_max=limit, tol=math.inf)
        q = relay_any_decode_pmf(p1_sr, params.n_relays)
        fvec = _fnp_vec(K, 0, limit + 2)

        # relay still undecoded at M: survival including j = M
        surv_geq = 1.0 - np.concatenate(([0.0], np.cumsum(p1_sr.probs[:-1])))
        surv_geq = np.clip(surv_geq + p1_sr.tail_mass, 0.0, 1.0)
        term1 = p1_sd.probs * surv_geq**params.n_relays

        term2 = np.zeros(limit + 1)
        for j in range(K, limit):
            qj = q.probs[j]
            if qj < _EPS_WEIGHT:
                continue
            w = _binom_row(j, params.pe_sd)  # phase-one packet count at D
            budget = qj
            for M in range(j + 1, limit + 1):
                val = (1.0 - params.pe_rd) * float(w @ fvec[1:len(w) + 1])
                term2[M] += qj * val
                budget -= qj * val
                if budget < _EPS_WEIGHT:
                    break
                w = _bernoulli_step(w, 1.0 - params.pe_rd)
        unnorm = term1 + term2
        tail = max(0.0, 1.0 - unnorm.sum())
        if tail <= tol or (m_max is not None) or limit >= cap:
            break
        limit = min(cap, limit * 2)
    if tail > tol:
        raise TruncationError(
            f"tail mass {tail:.3e} above tolerance {tol:.1e} at M_max={limit}",
            tail)
    omega = unnorm.sum() + tail
    return TransmissionPdf(unnorm / omega, tail, omega)


# ---------------------------------------------------------------------------
# network-coded scheme

def equivalent_erasures(params: ErasureNetworkParams):
    """(Pe_eq, Pe_eq2, Pe_eq3): effective erasure rates of the phase-two
    superposition as seen at D (current block), at the idle relay (current
    block) and at the idle relay (next block)."""
    pe_eq = 1.0 - params.pe_sd * (1.0 - params.pe_rd)
    pe_eq2 = 1.0 - params.pe_sr * (1.0 - params.pe_rr)
    pe_eq3 = 1.0 - (1.0 - params.pe_sr) * (1.0 - params.pe_rr)
    return pe_eq, pe_eq2, pe_eq3


def tilde_q_pdf(params: ErasureNetworkParams, n1: int, n2: int,
                m_max: Optional[int] = None, tol: float = 1e-9) -> TransmissionPdf:
    """First-decode-time pmf over the two relays with carried packets.

    Simultaneous decodes are attributed to the R2 term exactly once.
    """
    g1 = aux_g_pdf(params.K, n1, params.pe_sr, m_max=m_max, tol=tol)
    g2 = aux_g_pdf(params.K, n2, params.pe_sr, m_max=m_max, tol=tol)
    n = max(len(g1.probs), len(g2.probs))
    a = np.pad(g1.probs, (0, n - len(g1.probs)))
    b = np.pad(g2.probs, (0, n - len(g2.probs)))
    surv1_geq = np.clip(1.0 - np.concatenate(([0.0], np.cumsum(a[:-1])))
                        + g1.tail_mass, 0.0, 1.0)
    surv2_gt = np.clip(1.0 - np.cumsum(b) + g2.tail_mass, 0.0, 1.0)
    q = a * surv2_gt + b * surv1_geq
    tail = max(0.0, 1.0 - q.sum())
    return TransmissionPdf(q, tail, 1.0)


def tilde_q(j: int, n1: int, n2: int, pe_sr: float, K: int,
            tol: float = 1e-9) -> float:
    """Scalar convenience wrapper around :func:`tilde_q_pdf`."""
    params = ErasureNetworkParams(0.5, pe_sr, 0.5, 0.5, K)
    return tilde_q_pdf(params, n1, n2, tol=tol).prob(j)


def gamma_prob(j: int, M: int, n2: int, params: ErasureNetworkParams) -> float:
    """Probability that the idle relay has decoded the current block by the
    end of phase two (j phase-one slots, M - j phase-two slots)."""
    if M < j or j < 0:
        raise ValueError("need M >= j >= 0")
    _, pe_eq2, _ = equivalent_erasures(params)
    ws = _binom_row(j, params.pe_sr)
    wt = _binom_row(M - j, pe_eq2)
    conv = np.convolve(ws, wt)
    F = np.array([full_rank_cdf(params.K, u + n2) for u in range(len(conv))])
    return float(np.clip(conv @ F, 0.0, 1.0))


def carryover_pmfs(j: int, M: int, r2_decoded: bool,
                   params: ErasureNetworkParams):
    """(pmf of n2~, pmf of n3~) after a block with phase split (j, M).

    The successful relay carries nothing (half duplex), so n1~ is always a
    point mass at zero and is not returned.
    """
    if M < j:
        raise ValueError("need M >= j")
    _, _, pe_eq3 = equivalent_erasures(params)
    slots = M - j
    pe_r2 = params.pe_sr if r2_decoded else pe_eq3
    return _binom_row(slots, pe_r2), _binom_row(slots, params.pe_sd)


def netcoded_pdf(params: ErasureNetworkParams,
                 carryover: CarryoverState = CarryoverState(),
                 m_max: Optional[int] = None, tol: float = 1e-9,
                 _g_cache: Optional[dict] = None,
                 return_joint: bool = False):
    """Transmission-count pdf of the network-coded scheme for one block.

    With ``return_joint`` the per-j phase-two weight rows are returned as
    well (used for sampling the multi-block chain).
    """
    if params.n_relays != 2:
        raise ValueError("network-coded analysis covers exactly two relays")
    K = params.K
    n1, n2, n3 = carryover.as_tuple()
    pe_eq, _, _ = equivalent_erasures(params)
    worst = max(params.pe_sd, params.pe_sr)
    limit, cap = _grow_limits(K, worst, m_max)

    def get_g(n_p, pe, lim):
        key = (n_p, pe, lim)
        if _g_cache is not None and key in _g_cache:
            return _g_cache[key]
        g = aux_g_pdf(K, n_p, pe, m_max=lim, tol=math.inf)
        if _g_cache is not None:
            _g_cache[key] = g
        return g

    while True:
        g1 = get_g(n1, params.pe_sr, limit)
        g2 = get_g(n2, params.pe_sr, limit)
        g3 = get_g(n3, params.pe_sd, limit)
        fn3 = _fnp_vec(K, n3, limit + 2)

        a, b = g1.probs, g2.probs
        surv1_geq = np.clip(1.0 - np.concatenate(([0.0], np.cumsum(a[:-1])))
                            + g1.tail_mass, 0.0, 1.0)
        surv2_geq = np.clip(1.0 - np.concatenate(([0.0], np.cumsum(b[:-1])))
                            + g2.tail_mass, 0.0, 1.0)
        surv2_gt = np.clip(1.0 - np.cumsum(b) + g2.tail_mass, 0.0, 1.0)
        qt = a * surv2_gt + b * surv1_geq  # relay first-decode pmf

        term1 = g3.probs * surv1_geq * surv2_geq

        term2 = np.zeros(limit + 1)
        joint_rows = {} if return_joint else None
        for j in range(limit):
            qj = qt[j]
            if qj < _EPS_WEIGHT:
                continue
            w = _binom_row(j, params.pe_sd)
            budget = qj
            row = [] if return_joint else None
            for M in range(j + 1, limit + 1):
                val = qj * (1.0 - pe_eq) * float(w @ fn3[1:len(w) + 1])
                term2[M] += val
                if return_joint:
                    row.append(val)
                budget -= val
                if budget < _EPS_WEIGHT:
                    break
                w = _bernoulli_step(w, 1.0 - pe_eq)
            if return_joint and row:
                joint_rows[j] = np.array(row)
        unnorm = term1 + term2
        tail = max(0.0, 1.0 - unnorm.sum())
        if tail <= tol or (m_max is not None) or limit >= cap:
            break
        limit = min(cap, limit * 2)
    if tail > tol:
        raise TruncationError(
            f"tail mass {tail:.3e} above tolerance {tol:.1e} at M_max={limit}",
            tail)
    omega = unnorm.sum() + tail
    pdf = TransmissionPdf(unnorm / omega, tail, omega)
    if return_joint:
        return pdf, term1, joint_rows
    return pdf


# ---------------------------------------------------------------------------
# multi-block steady state (no closed form; sample the carryover chain)

@dataclass
class BlockSample:
    carryover_in: tuple
    M: int
    j: Optional[int]
    r2_decoded: Optional[bool]


def sample_block_chain(params: ErasureNetworkParams, n_blocks: int, seed: int,
                       tol: float = 1e-9, _pdf_cache: Optional[dict] = None,
                       _g_cache: Optional[dict] = None) -> list:
    """Sample the per-block (carryover, j, M) chain from the analysis.

    Blocks are coupled only through the carryover counts; each block draws
    (j, M) from the analytic joint and then the carryover binomials.
    """
    rng = np.random.default_rng(seed)
    g_cache: dict = {} if _g_cache is None else _g_cache
    pdf_cache: dict = {} if _pdf_cache is None else _pdf_cache
    marg_cache: dict = {}

    def relay_marginal(n_p):
        if n_p not in marg_cache:
            marg_cache[n_p] = aux_g_pdf(params.K, n_p, params.pe_sr, tol=tol)
        return marg_cache[n_p]
    state = CarryoverState()
    out = []
    for _ in range(n_blocks):
        key = state.as_tuple()
        if key not in pdf_cache:
            pdf_cache[key] = netcoded_pdf(params, state, tol=tol,
                                          _g_cache=g_cache, return_joint=True)
        pdf, term1, rows = pdf_cache[key]
        w_first = term1.sum()
        w_rows = {j: r.sum() for j, r in rows.items()}
        total = w_first + sum(w_rows.values())
        u = rng.random() * total
        if u < w_first:
            # destination decodes before either relay: no phase two
            M = int(rng.choice(len(term1), p=term1 / w_first))
            out.append(BlockSample(key, M, None, None))
            state = CarryoverState()
            continue
        u -= w_first
        j = None
        for jj, wj in w_rows.items():
            if u < wj:
                j = jj
                break
            u -= wj
        if j is None:  # numerical corner
            j = max(w_rows)
        row = rows[j]
        M = j + 1 + int(rng.choice(len(row), p=row / row.sum()))
        # which relay won phase one decides the idle relay's head start
        g1 = relay_marginal(state.n1)
        g2 = relay_marginal(state.n2)
        c1 = g1.prob(j) * g2.survival_from(j + 1)   # R1 strictly first
        c2 = g2.prob(j) * g1.survival_from(j)       # R2 first or tie
        r1_won = bool(rng.random() * (c1 + c2) < c1)
        idle_carry = state.n2 if r1_won else state.n1
        gamma = gamma_prob(j, M, idle_carry, params)
        r2 = bool(rng.random() < gamma)
        _, _, pe_eq3 = equivalent_erasures(params)
        pe_r2 = params.pe_sr if r2 else pe_eq3
        n2_new = int(rng.binomial(M - j, 1.0 - pe_r2))
        n3_new = int(rng.binomial(M - j, 1.0 - params.pe_sd))
        out.append(BlockSample(key, M, j, r2))
        state = CarryoverState(0, n2_new, n3_new)
    return out


def steady_state_pdf(params: ErasureNetworkParams, n_blocks: int = 220,
                     burn_in: int = 20, seed: int = 0,
                     tol: float = 1e-9) -> TransmissionPdf:
    """Mixture of per-block pdfs over carryovers visited by the chain."""
    if n_blocks < 2:
        raise ValueError("steady state needs at least two blocks")
    burn_in = min(burn_in, n_blocks - 1)
    pdf_cache: dict = {}
    chain = sample_block_chain(params, n_blocks, seed, tol=tol,
                               _pdf_cache=pdf_cache)
    mix: dict = {}
    for blk in chain[burn_in:]:
        mix[blk.carryover_in] = mix.get(blk.carryover_in, 0) + 1
    total = sum(mix.values())
    acc = None
    tail = 0.0
    for key, count in mix.items():
        pdf = pdf_cache[key][0]
        w = count / total
        arr = pdf.probs * w
        if acc is None:
            acc = arr.copy()
        elif len(arr) > len(acc):
            arr[:len(acc)] += acc
            acc = arr
        else:
            acc[:len(arr)] += arr
        tail += pdf.tail_mass * w
    return TransmissionPdf(acc, tail, 1.0)
