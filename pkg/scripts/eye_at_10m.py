"""Eye diagram at the 10 m operating point, with opening statistics per timing phase.

    python scripts/eye_at_10m.py --ebn0 15 --traces 2000 --out eye.csv
"""
import argparse

import numpy as np

from mmwave_link.config import LinkConfig
from mmwave_link.link import eye_matrix, to_csv
from mmwave_link.phy import eye_opening


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--ebn0", type=float, default=None, help="Eb/N0 in dB (default: noise off)")
    ap.add_argument("--traces", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()

    eye = eye_matrix(LinkConfig().with_ebn0(args.ebn0), args.traces, args.seed)
    sps = eye.shape[1]
    scale = np.abs(eye[:, sps // 2]).mean()
    for c in range(sps):
        mark = "  <- decision" if c == sps // 2 else ""
        print(f"phase {c}: opening {eye_opening(eye, c) / scale:+.3f}{mark}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(to_csv([f"s{i}" for i in range(sps)], eye.tolist()))


if __name__ == "__main__":
    main()
