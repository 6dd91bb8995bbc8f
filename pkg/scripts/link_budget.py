"""Link-budget worksheet: free-space loss at 60 GHz next to the simulator's -34 dBm / 1 m anchor.

The simulator only uses the anchored 20 dB/decade law; this script shows how
much lumped receive-chain loss the anchor implies given the antenna figures.

    python scripts/link_budget.py --distances 1,2,5,10
"""
import argparse
import math

from mmwave_link.channel import AgcConfig, power_to_dbm, received_power_dbm

C = 299_792_458.0


def fspl_db(distance_m, freq_hz=60e9):
    return 20 * math.log10(4 * math.pi * distance_m * freq_hz / C)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--distances", default="1,2,3,5,7,10")
    ap.add_argument("--eirp-dbm", type=float, default=22.4)
    ap.add_argument("--rx-antenna-dbi", type=float, default=22.4)
    args = ap.parse_args()

    agc = AgcConfig()
    target = power_to_dbm(agc.target_power)
    print(f"EIRP {args.eirp_dbm} dBm, Rx antenna {args.rx_antenna_dbi} dBi, AGC target {target:.1f} dBm, "
          f"gain range {agc.min_gain_db:g}..{agc.max_gain_db:g} dB")
    print(f"{'d [m]':>6} {'FSPL':>7} {'RF in':>8} {'IF model':>9} {'implied loss':>13} {'AGC gain':>9}")
    for d in (float(x) for x in args.distances.split(",")):
        rf = args.eirp_dbm - fspl_db(d) + args.rx_antenna_dbi
        if_dbm = received_power_dbm(d)
        gain = min(max(target - if_dbm, agc.min_gain_db), agc.max_gain_db)
        print(f"{d:6.1f} {fspl_db(d):7.2f} {rf:8.2f} {if_dbm:9.2f} {rf - if_dbm:13.2f} {gain:9.2f}")


if __name__ == "__main__":
    main()
