#!/usr/bin/env python3
"""Superposition-weight trade-off for the analogue network coding model.

Sweeps fixed superposition weights alpha (the fraction of source power
spent on the current block) against the adaptive operating-point policy,
reporting mean slots per block.  Putting power into the next block only
pays when current-block slots are cheap relative to the carryover credit,
which depends strongly on SNR.

Usage: python3 scripts/alpha_tradeoff.py [--snr-db X] [--blocks B] [--seed S]
"""

import argparse

import numpy as np

from fcrelay.wireless import Topology, WirelessParams, simulate_approach2


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--snr-db", type=float, default=20.0)
    ap.add_argument("--blocks", type=int, default=400)
    ap.add_argument("--burn", type=int, default=40)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    topo = Topology()
    wp = WirelessParams.from_topology(topo, snr=10 ** (args.snr_db / 10))
    K = 100

    print(f"SNR {args.snr_db} dB, {args.blocks} blocks ({args.burn} burn-in)")
    for policy in (1.0, 0.9, 0.75, 0.5, 0.25, 0.0, "auto"):
        slots = simulate_approach2(wp, K, args.blocks, args.seed,
                                   alpha_policy=policy)
        s = slots[args.burn:]
        se = s.std(ddof=1) / np.sqrt(len(s))
        label = policy if isinstance(policy, str) else f"{policy:.2f}"
        print(f"  alpha={label:>4s}  mean slots {s.mean():9.2f} "
              f"+/- {1.96 * se:.2f}")


if __name__ == "__main__":
    main()
