"""Single-bank false-alarm rate of the preamble correlator on random bits vs the binomial tail.

    python scripts/false_lock_rate.py --bits 50000000
"""
import argparse
from math import comb

import numpy as np

from mmwave_link.sync import PREAMBLE_LEN, preamble_scores, track_frames


def tail(threshold, n=PREAMBLE_LEN):
    # score = 2*matches - n, so score >= threshold needs ceil((threshold + n) / 2) matches
    need = -(-(threshold + n) // 2)
    return sum(comb(n, m) for m in range(need, n + 1)) / 2 ** n


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bits", type=int, default=20_000_000)
    ap.add_argument("--chunk", type=int, default=5_000_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    thresholds = (20, 22, 24, 26, 28)
    hits = dict.fromkeys(thresholds, 0)
    offsets = locks = 0
    for start in range(0, args.bits, args.chunk):
        bits = rng.integers(0, 2, min(args.chunk, args.bits - start)).astype(np.uint8)
        s = preamble_scores(bits)
        offsets += len(s)
        for t in thresholds:
            hits[t] += int(np.count_nonzero(s >= t))
        locks += len(track_frames(bits, 28).locks)

    print(f"{offsets} offsets")
    print(f"{'thr':>4} {'hits':>8} {'measured':>11} {'binomial':>11} {'pair bound/offset':>18}")
    for t in thresholds:
        p = tail(t)
        print(f"{t:4d} {hits[t]:8d} {hits[t] / offsets:11.3e} {p:11.3e} {p * p:18.3e}")
    print(f"dual-bank locks at threshold 28: {locks}")


if __name__ == "__main__":
    main()
