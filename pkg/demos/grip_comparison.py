"""Mobility failures and panel usage for the four grips.

Blocking the middle panel pushes the gaming grip onto the side panels, and
its failure count climbs well above free space.
"""

import argparse

import numpy as np

from mpuesim.config import desk_preset
from mpuesim.engine import run

GRIPS = ("FREE", "RHB", "DHS", "DHG")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="21 UEs for 2 s")
    args = ap.parse_args()

    print(f"{'grip':>5} {'failures':>9} {'per UE/min':>11} {'HO/UE/min':>10}   panel stay P1/P2/P3")
    for grip in GRIPS:
        fails, rate, ho, stay = [], [], [], []
        for seed in range(args.seeds):
            cfg = desk_preset(grip=grip, seed=seed)
            if args.quick:
                cfg = cfg.with_scenario(n_ue=21, sim_time_s=2.0)
            res = run(cfg)
            s = res.summary()
            fails.append(res.counters.mobility_failures)
            rate.append(s["failures_per_ue_min"])
            ho.append(s["ho_per_ue_min"])
            stay.append(res.counters.panel_stay_pct())
        st = np.mean(stay, axis=0)
        print(f"{grip:>5} {np.mean(fails):9.1f} {np.mean(rate):11.2f} {np.mean(ho):10.2f}   "
              f"{st[0]:5.1f} {st[1]:5.1f} {st[2]:5.1f}")


if __name__ == "__main__":
    main()
