"""Raw and post-FEC BER/FER against Eb/N0, next to the DBPSK closed form.

    python scripts/ber_curve.py --points 4,5,6,7,8,9,10 --bits 2000000 --workers 4 --out ber.csv
    python scripts/ber_curve.py --channel default     # 10 m multipath instead of LOS-only
"""
import argparse
from dataclasses import replace

from mmwave_link.channel import ChannelConfig
from mmwave_link.config import LinkConfig, SweepConfig
from mmwave_link.link import ber_sweep, sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--points", default="4,5,6,7,8,9,10")
    ap.add_argument("--bits", type=int, default=2_000_000)
    ap.add_argument("--channel", choices=["los", "default"], default="los")
    ap.add_argument("--no-equalizer", action="store_true")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()

    channel = ChannelConfig() if args.channel == "default" else ChannelConfig(taps=((0.0, 1 + 0j),))
    cfg = LinkConfig(channel=channel)
    if args.no_equalizer:
        cfg = replace(cfg, demod=replace(cfg.demod, equalizer_taps=0))
    sweep = SweepConfig(ebn0_points=tuple(float(p) for p in args.points.split(",")),
                        bits_per_point=args.bits, link=cfg, master_seed=args.seed)
    rows = ber_sweep(sweep, workers=args.workers)

    print(f"{'Eb/N0':>6} {'raw BER':>11} {'theory':>11} {'ratio':>6} {'post-FEC':>11} {'FER':>10}")
    for r in rows:
        print(f"{r.ebn0_db:6.1f} {r.raw_ber:11.3e} {r.theory_ber:11.3e} {r.raw_ber / r.theory_ber:6.2f} "
              f"{r.post_fec_ber:11.3e} {r.fer:10.3e}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(sweep_csv(rows))


if __name__ == "__main__":
    main()
