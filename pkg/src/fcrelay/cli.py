"""Command-line driver: analytic pdfs, Monte Carlo runs, SNR sweeps.

Config resolution order: built-in defaults (the reference numerical setup:
K=100, Pe_SD=0.4, other erasures 0.2, distances 20/10.3/10.3/5 m, path-loss
exponent 3) <- JSON config file (--config) <- explicit CLI flags.

Exit codes: 0 success, 2 config error, 3 truncation/runaway error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .analysis import (CarryoverState, ErasureNetworkParams, TransmissionPdf,
                       TruncationError, direct_pdf, naive_pdf, netcoded_pdf,
                       pdf_stats, steady_state_pdf)
from .simulate import RunawayError, SimConfig, run_batch
from .wireless import (Topology, WirelessParams, simulate_approach1,
                       simulate_approach2)

SCHEMES = ("direct", "naive", "netcoded")
CHANNELS = ("erasure", "wireless_approach1", "wireless_approach2")

DEFAULTS = {
    "scheme": "netcoded",
    "channel": "erasure",
    "K": 100,
    "pe_sd": 0.4,
    "pe_sr": 0.2,
    "pe_rd": 0.2,
    "pe_rr": 0.2,
    "n_relays": 2,
    "m": 1024,
    "mu": 16,
    "n": 2080,
    "d_sd": 20.0,
    "d_sr": 10.3,
    "d_rd": 10.3,
    "d_rr": 5.0,
    "exponent": 3.0,
    "snr_db": 40.0,
    "gamma_gap_db": 0.0,
    "alpha": "auto",
    "trials": 10000,
    "blocks": 1,
    "carryover": [0, 0, 0],
    "seed": None,
    "m_max": None,
    "tol": 1e-9,
    "check_decoding": False,
}


class ConfigError(ValueError):
    pass


def _parse_grid(text: str) -> list:
    """Parse an 'a:b:step' dB grid (inclusive of b when it lands on the grid)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be a:b:step, got {text!r}")
    try:
        a, b, step = (float(x) for x in parts)
    except ValueError as e:
        raise ConfigError(f"non-numeric grid component in {text!r}") from e
    if step <= 0 or b < a:
        raise ConfigError(f"grid {text!r} needs b >= a and step > 0")
    out = []
    v = a
    while v <= b + 1e-9:
        out.append(round(v, 9))
        v += step
    return out


def _parse_alpha(text: str):
    if text == "auto":
        return "auto"
    try:
        val = float(text)
    except ValueError as e:
        raise ConfigError(f"--alpha must be 'auto' or a number, got {text!r}") from e
    if not (0.0 <= val <= 1.0):
        raise ConfigError(f"fixed alpha {val} outside [0, 1]")
    return val


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config is not None:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from e
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in ("scheme", "channel", "trials", "seed", "blocks"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "alpha", None) is not None:
        cfg["alpha"] = _parse_alpha(args.alpha)
    elif isinstance(cfg["alpha"], str) and cfg["alpha"] != "auto":
        cfg["alpha"] = _parse_alpha(cfg["alpha"])

    if cfg["scheme"] not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}, got {cfg['scheme']!r}")
    if cfg["channel"] not in CHANNELS:
        raise ConfigError(f"channel must be one of {CHANNELS}, got {cfg['channel']!r}")
    if cfg["seed"] is None:
        raise ConfigError("a seed is required; wall-clock seeding is not supported")
    if int(cfg["trials"]) < 1:
        raise ConfigError("trials must be >= 1")
    if int(cfg["blocks"]) < 1:
        raise ConfigError("blocks must be >= 1")
    if int(cfg["K"]) < 1:
        raise ConfigError("K must be >= 1")
    co = cfg["carryover"]
    if len(co) != 3 or any(int(x) < 0 for x in co):
        raise ConfigError(f"carryover must be three nonnegative counts, got {co}")
    cfg["trials"] = int(cfg["trials"])
    cfg["blocks"] = int(cfg["blocks"])
    cfg["seed"] = int(cfg["seed"])
    cfg["K"] = int(cfg["K"])
    cfg["carryover"] = [int(x) for x in co]
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def erasure_params(cfg: dict) -> ErasureNetworkParams:
    try:
        return ErasureNetworkParams(pe_sd=cfg["pe_sd"], pe_sr=cfg["pe_sr"],
                                    pe_rd=cfg["pe_rd"], pe_rr=cfg["pe_rr"],
                                    K=cfg["K"], n_relays=cfg["n_relays"])
    except ValueError as e:
        raise ConfigError(str(e)) from e


def wireless_params(cfg: dict) -> WirelessParams:
    topo = Topology(d_sd=cfg["d_sd"], d_sr=cfg["d_sr"], d_rd=cfg["d_rd"],
                    d_rr=cfg["d_rr"], path_loss_exponent=cfg["exponent"])
    snr = 10.0 ** (cfg["snr_db"] / 10.0)
    gap = 10.0 ** (-cfg["gamma_gap_db"] / 10.0)
    try:
        return WirelessParams.from_topology(topo, snr=snr, m=cfg["m"],
                                            mu=cfg["mu"], n=cfg["n"],
                                            gamma_gap=gap)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def analytic_pdf_for(cfg: dict) -> TransmissionPdf:
    params = erasure_params(cfg)
    scheme = cfg["scheme"]
    if scheme == "direct":
        return direct_pdf(params.K, params.pe_sd, m_max=cfg["m_max"], tol=cfg["tol"])
    if scheme == "naive":
        return naive_pdf(params, m_max=cfg["m_max"], tol=cfg["tol"])
    if cfg["blocks"] > 1:
        return steady_state_pdf(params, n_blocks=cfg["blocks"], seed=cfg["seed"],
                                tol=cfg["tol"])
    carry = CarryoverState(*cfg["carryover"])
    return netcoded_pdf(params, carry, m_max=cfg["m_max"], tol=cfg["tol"])


def _pdf_payload(pdf: TransmissionPdf) -> dict:
    mean, var, _ = pdf_stats(pdf)
    return {
        "probs": [float(p) for p in pdf.normalized()],
        "tail_mass": float(pdf.tail_mass / pdf.normalizer),
        "m_max": int(pdf.m_max),
        "mean": float(mean),
        "variance": float(var),
    }


def _hist_payload(m_values: np.ndarray) -> dict:
    flat = np.asarray(m_values).ravel()
    vals, counts = np.unique(flat, return_counts=True)
    total = int(flat.size)
    return {
        "histogram": {int(v): int(c) for v, c in zip(vals, counts)},
        "probabilities": {int(v): float(c / total) for v, c in zip(vals, counts)},
        "trials": total,
        "mean": float(flat.mean()),
        "variance": float(flat.var(ddof=1)) if total > 1 else 0.0,
        "min": int(flat.min()),
        "max": int(flat.max()),
    }


def _batch_mean_stderr(series: np.ndarray, n_batches: int = 20):
    """Mean and standard error from batch means (blocks correlate via carryover)."""
    series = np.asarray(series, dtype=float)
    if series.size < n_batches:
        n_batches = max(1, series.size)
    batches = np.array_split(series, n_batches)
    means = np.array([b.mean() for b in batches])
    se = means.std(ddof=1) / math.sqrt(len(means)) if len(means) > 1 else 0.0
    return float(series.mean()), float(se)


def cmd_analyze(cfg: dict) -> dict:
    if cfg["channel"] != "erasure":
        raise ConfigError("analyze requires the erasure channel "
                          "(use sweep-snr for wireless means)")
    pdf = analytic_pdf_for(cfg)
    return {
        "command": "analyze",
        "config": cfg,
        "config_hash": config_hash(cfg),
        "version": __version__,
        "analytic": _pdf_payload(pdf),
    }


def cmd_simulate(cfg: dict) -> dict:
    bundle = {
        "command": "simulate",
        "config": cfg,
        "config_hash": config_hash(cfg),
        "version": __version__,
    }
    channel = cfg["channel"]
    if channel == "erasure":
        params = erasure_params(cfg)
        sim = SimConfig(params=params, m=cfg["m"], mu=cfg["mu"],
                        n_blocks=cfg["blocks"], check_decoding=cfg["check_decoding"])
        batch = run_batch(cfg["scheme"], sim, cfg["trials"], cfg["seed"])
        bundle["empirical"] = _hist_payload(batch.m_values)
        if cfg["blocks"] > 1:
            per_block = batch.m_values.mean(axis=0)
            burn = min(cfg["blocks"] // 10 + 1, cfg["blocks"] - 1)
            steady = batch.m_values[:, burn:].ravel()
            mean, se = _batch_mean_stderr(steady)
            bundle["per_block_mean"] = [float(x) for x in per_block]
            bundle["steady_state"] = {"burn_in_blocks": burn, "mean": mean,
                                      "stderr": se,
                                      "variance": float(steady.var(ddof=1))}
        try:
            bundle["analytic"] = _pdf_payload(analytic_pdf_for(cfg))
        except TruncationError:
            bundle["analytic"] = None
    elif channel == "wireless_approach1":
        wp = wireless_params(cfg)
        batch = simulate_approach1(wp, cfg["scheme"], cfg["K"], cfg["trials"],
                                   cfg["seed"], n_blocks=cfg["blocks"],
                                   check_decoding=cfg["check_decoding"])
        bundle["empirical"] = _hist_payload(batch.m_values)
    else:
        wp = wireless_params(cfg)
        slots = simulate_approach2(wp, cfg["K"], cfg["blocks"], cfg["seed"],
                                   scheme=cfg["scheme"],
                                   alpha_policy=cfg["alpha"])
        burn = min(cfg["blocks"] // 10 + 1, max(cfg["blocks"] - 1, 0))
        mean, se = _batch_mean_stderr(slots[burn:])
        bundle["per_block_slots"] = [int(x) for x in slots]
        bundle["steady_state"] = {"burn_in_blocks": burn, "mean": mean,
                                  "stderr": se}
    return bundle


def cmd_sweep_snr(cfg: dict, grid: list) -> dict:
    if cfg["channel"] == "erasure":
        raise ConfigError("sweep-snr requires a wireless channel mode")
    if not grid:
        raise ConfigError("SNR grid is empty")
    rows = []
    for i, snr_db in enumerate(grid):
        point = dict(cfg, snr_db=snr_db)
        row = {"snr_db": snr_db}
        for scheme in SCHEMES:
            wp = wireless_params(point)
            seed = cfg["seed"] + 1000 * i
            if cfg["channel"] == "wireless_approach1":
                batch = simulate_approach1(wp, scheme, cfg["K"], cfg["trials"],
                                           seed, n_blocks=cfg["blocks"])
                flat = batch.m_values[:, -1] if cfg["blocks"] > 1 \
                    else batch.m_values.ravel()
                mean = float(flat.mean())
                se = float(flat.std(ddof=1) / math.sqrt(flat.size))
            else:
                slots = simulate_approach2(wp, cfg["K"], max(cfg["blocks"],
                                                             cfg["trials"]),
                                           seed, scheme=scheme,
                                           alpha_policy=cfg["alpha"])
                burn = min(len(slots) // 10 + 1, len(slots) - 1)
                mean, se = _batch_mean_stderr(slots[burn:])
            row[scheme] = {"mean": mean, "stderr": se}
        rows.append(row)
    return {
        "command": "sweep-snr",
        "config": cfg,
        "config_hash": config_hash(cfg),
        "version": __version__,
        "snr_db_grid": grid,
        "rows": rows,
    }


def _to_csv(bundle: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if bundle["command"] == "sweep-snr":
        w.writerow(["snr_db"] + [f"{s}_{f}" for s in SCHEMES
                                 for f in ("mean", "stderr")])
        for row in bundle["rows"]:
            out = [row["snr_db"]]
            for s in SCHEMES:
                out += [row[s]["mean"], row[s]["stderr"]]
            w.writerow(out)
        return buf.getvalue()
    analytic = bundle.get("analytic")
    empirical = bundle.get("empirical")
    probs = analytic["probs"] if analytic else []
    emp = {int(k): v for k, v in empirical["probabilities"].items()} \
        if empirical else {}
    m_hi = max(len(probs) - 1, max(emp) if emp else 0)
    w.writerow(["M", "analytic_p", "empirical_p"])
    for M in range(m_hi + 1):
        a = probs[M] if M < len(probs) else ""
        e = emp.get(M, 0.0) if empirical else ""
        w.writerow([M, a, e])
    return buf.getvalue()


def emit(bundle: dict, out, fmt: str) -> None:
    if fmt == "json":
        text = json.dumps(bundle, sort_keys=True, indent=2) + "\n"
    else:
        text = _to_csv(bundle)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fcrelay",
        description="Fountain-coded transmission over two-relay networks: "
                    "analytic distributions and Monte Carlo simulation.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flat keys)")
        p.add_argument("--scheme", choices=SCHEMES)
        p.add_argument("--channel", choices=CHANNELS)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--blocks", type=int,
                       help="consecutive blocks per trial (netcoded carryover)")
        p.add_argument("--alpha",
                       help="superposition weight policy: 'auto' or a fixed value")
        p.add_argument("--out", help="output path ('-' for stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    common(sub.add_parser("analyze", help="closed-form transmission pdf"))
    common(sub.add_parser("simulate", help="Monte Carlo protocol simulation"))
    sp = sub.add_parser("sweep-snr", help="mean transmissions vs SNR per scheme")
    common(sp)
    sp.add_argument("--snr-db-grid", default="20:70:10",
                    help="a:b:step grid in dB (default 20:70:10)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.cmd == "analyze":
            bundle = cmd_analyze(cfg)
        elif args.cmd == "simulate":
            bundle = cmd_simulate(cfg)
        else:
            bundle = cmd_sweep_snr(cfg, _parse_grid(args.snr_db_grid))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except TruncationError as e:
        print(f"truncation error: {e} (tail mass {e.tail_mass:.3g})",
              file=sys.stderr)
        return 3
    except RunawayError as e:
        print(f"runaway simulation: {e}", file=sys.stderr)
        return 3
    emit(bundle, args.out, args.format)
    return 0


if __name__ == "__main__":
    sys.exit(main())
