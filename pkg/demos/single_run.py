"""One desk-scale run under the gaming grip, with a look at what one UE went through."""

import argparse
import dataclasses
from collections import Counter

from mpuesim.config import desk_preset
from mpuesim.engine import run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grip", default="DHG")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quick", action="store_true", help="21 UEs for 2 s")
    args = ap.parse_args()

    cfg = desk_preset(grip=args.grip, seed=args.seed)
    if args.quick:
        cfg = cfg.with_scenario(n_ue=21, sim_time_s=2.0)
    cfg = dataclasses.replace(cfg, trace=dataclasses.replace(cfg.trace, selection=True, ues=(0,)))
    res = run(cfg)

    print(f"{cfg.scenario.n_ue} UEs, {cfg.scenario.sim_time_s:g} s, grip {args.grip}")
    for k, v in res.summary().items():
        print(f"  {k:>22}: {v}")
    stay = res.counters.panel_stay_pct()
    print("  serving panel stay: " + ", ".join(f"P{i + 1} {p:.1f}%" for i, p in enumerate(stay)))

    kinds = Counter(e[2] for e in res.events)
    print("event log:", dict(sorted(kinds.items())))

    _, rows = res.traces["selection"]
    causes = Counter(r[4] for r in rows)
    print("UE 0 serving-selection changes by cause:", dict(causes))
    print("first five:")
    for r in rows[:5]:
        print("  ", r)


if __name__ == "__main__":
    main()
