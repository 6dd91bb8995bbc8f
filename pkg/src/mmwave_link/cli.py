"""Command-line harness: ``mmwave-link <subcommand> [--config F] [--seed N] [--out F]``.

Exit codes: 0 success, 1 selftest failure, 2 configuration error, 3 no sync.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import link
from .config import ConfigError, load_config

log = logging.getLogger("mmwave_link")

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_NO_SYNC = 0, 1, 2, 3


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _points(text: str):
    return tuple(None if p.strip().lower() in ("none", "off") else float(p) for p in text.split(","))


def cmd_ber_sweep(args, cfg) -> int:
    if args.points:
        cfg = replace(cfg, ebn0_points=_points(args.points))
    if args.bits:
        cfg = replace(cfg, bits_per_point=args.bits)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    rows = link.ber_sweep(cfg, workers=args.workers)
    for r in rows:
        log.info("Eb/N0 %s dB: raw %.3e  post-FEC %.3e  FER %.3e", r.ebn0_db, r.raw_ber, r.post_fec_ber, r.fer)
    _emit(link.sweep_csv(rows), args.out)
    return EXIT_OK


def cmd_transfer(args, cfg) -> int:
    payload = Path(args.input).read_bytes()
    if not payload:
        log.error("input file is empty")
        return EXIT_CONFIG
    result = link.run_link(payload, cfg.link, args.seed or 0)
    rep = result.report
    summary = json.dumps(rep.as_dict(), indent=2, sort_keys=True) + "\n"
    if args.report:
        Path(args.report).write_text(summary)
    if args.out:
        Path(args.out).write_bytes(result.payload_out)
    else:
        sys.stdout.write(summary)
    log.info("%d bytes in, %d bytes out, raw BER %.3e, frames failed %d, lost %d, %.1f s",
             len(payload), len(result.payload_out), rep.raw_ber, rep.frames_failed, rep.frames_lost,
             rep.elapsed_wall_time)
    if rep.no_sync:
        log.error("receiver never acquired sync")
        return EXIT_NO_SYNC
    return EXIT_OK


def cmd_eye(args, cfg) -> int:
    _emit(link.export_eye(cfg.link, args.traces, args.seed or 0), args.out)
    return EXIT_OK


def cmd_response(args, cfg) -> int:
    freq, imp = link.export_response(cfg.link, args.points)
    _emit(freq, args.out)
    if args.out:
        p = Path(args.out)
        p.with_name(p.stem + "_impulse" + p.suffix).write_text(imp)
    return EXIT_OK


def cmd_spectrum(args, cfg) -> int:
    _emit(link.export_spectrum(cfg.link, args.seed or 0, args.nperseg), args.out)
    return EXIT_OK


def selftest_checks(seed: int = 0):
    """Quick end-to-end checks; yields ``(name, passed, detail)``."""
    from .channel import ChannelConfig, received_power_dbm
    from .framing import compute_rate_ledger
    from .galois_fec import rs_decode, rs_encode
    from .sequences import build_gold_pair
    from .sync import detect_preamble

    rng = np.random.default_rng(seed)
    led = compute_rate_ledger()
    yield "rate ledger", abs(led.information_bit_rate - 804.32e6) < 0.01e6, f"{led.information_bit_rate / 1e6:.4f} Mbps"

    data = rng.integers(0, 256, 239, dtype=np.uint8).tobytes()
    cw = bytearray(rs_encode(data))
    for p in rng.choice(255, 8, replace=False):
        cw[p] ^= 0x5A
    out, n = rs_decode(bytes(cw))
    yield "rs 8-error correction", out == data and n == 8, f"corrected {n}"

    pair = build_gold_pair()
    a = 1 - 2 * np.array(pair.preamble.chips)
    b = 1 - 2 * np.array(pair.scrambler.chips)
    cross = {int(a @ np.roll(b, s)) for s in range(31)}
    yield "gold cross-correlation", cross <= {-1, -9, 7}, str(sorted(cross))

    units = link.chunk_payload(rng.bytes(2000))
    bits = link.on_air_bits(units)
    ok = all(detect_preamble(np.concatenate([np.zeros(s, np.uint8), bits[64:]])).alignment_k == s for s in range(8))
    yield "byte alignment", ok, "skews 0..7"

    yield "link budget", received_power_dbm(1) == -34 and received_power_dbm(10) == -54, "-34/-54 dBm"

    payload = rng.bytes(20000)
    res = link.run_link(payload, link.LinkConfig(), seed)
    yield "10 m noiseless transfer", res.payload_out == payload, f"raw errors {res.report.bit_errors_raw}"
    res = link.run_link(payload, link.LinkConfig(channel=ChannelConfig.identity()), seed)
    yield "identity transfer", res.payload_out == payload, f"frames {res.report.frames_synced}"


def cmd_selftest(args, cfg) -> int:
    lines, ok = [], True
    for name, passed, detail in selftest_checks(args.seed or 0):
        ok &= bool(passed)
        lines.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}\n")
    _emit("".join(lines), args.out)
    return EXIT_OK if ok else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file (default stdout)")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="mmwave-link", parents=[common],
                                     description="60 GHz DBPSK link simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ber-sweep", parents=[common], help="BER/FER versus Eb/N0")
    p.add_argument("--points", help="comma-separated Eb/N0 values in dB ('none' = noise off)")
    p.add_argument("--bits", type=int, help="on-air bits per point")
    p.set_defaults(func=cmd_ber_sweep)

    p = sub.add_parser("transfer", parents=[common], help="send a file over the simulated link")
    p.add_argument("input")
    p.add_argument("--report", help="write the JSON BER report here")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("eye", parents=[common], help="eye diagram CSV")
    p.add_argument("--traces", type=int, default=500)
    p.set_defaults(func=cmd_eye)

    p = sub.add_parser("response", parents=[common], help="channel frequency/impulse response CSV")
    p.add_argument("--points", type=int, default=401)
    p.set_defaults(func=cmd_response)

    p = sub.add_parser("spectrum", parents=[common], help="transmit power spectrum CSV")
    p.add_argument("--nperseg", type=int, default=1024)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("selftest", parents=[common], help="quick end-to-end checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("seed", None), ("out", None), ("workers", 1), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
