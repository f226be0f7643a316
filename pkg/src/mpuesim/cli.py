"""Command-line entry point: ``python -m mpuesim <command>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import radio
from .config import SimConfig, load_config
from .engine import run, sweep
from .errors import ConfigError
from .geometry import build_hex_layout, write_layout_csv
from .kpi import write_summary_csv


def _config(path) -> SimConfig:
    return load_config(path) if path else SimConfig()


def cmd_run(args) -> int:
    cfg = _config(args.config)
    if args.desk:
        cfg = cfg.with_scenario(n_ue=105, sim_time_s=10.0)
    over = {k: v for k, v in (("seed", args.seed), ("grip", args.grip),
                              ("o_p_db", args.op_db), ("o_b_db", args.ob_db)) if v is not None}
    cfg = cfg.with_scenario(**over).validate()
    res = run(cfg)
    out = res.write(args.out)
    sys.stdout.write(res.summary_csv())
    print(f"outputs written to {out}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args.config)
    if args.desk:
        cfg = cfg.with_scenario(n_ue=105, sim_time_s=10.0)
    seeds = [cfg.scenario.seed + i for i in range(args.seeds)]
    rows = sweep(cfg, args.grips, args.op_db, args.ob_db, seeds, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(out / "summary.csv", rows)
    sys.stdout.write((out / "summary.csv").read_text())
    return 0


def cmd_export_mask(args) -> int:
    cfg = _config(args.config)
    masks = radio.bundled_grip_masks(cfg.antenna.mask_levels, res_deg=args.res_deg)
    if args.grip not in masks:
        raise ConfigError([f"unknown grip {args.grip!r}; choose from {sorted(masks)}"])
    radio.write_mask_csv(masks[args.grip], args.out)
    return 0


def cmd_export_layout(args) -> int:
    isd = args.isd if args.isd is not None else _config(args.config).scenario.isd_m
    write_layout_csv(build_hex_layout(isd), args.out)
    return 0


def cmd_export_pattern(args) -> int:
    cfg = _config(args.config)
    az = np.arange(-180.0, 180.0 + 1e-9, args.res_deg)
    el = np.full_like(az, args.el)
    if args.kind == "tx":
        grid = radio.default_tx_grid(cfg.antenna.tx_outer_el_deg, cfg.antenna.tx_inner_el_deg)
        gain = radio.tx_beam_gain(grid, args.index, az, el)
        label = f"tx{args.index}"
    else:
        masks = radio.bundled_grip_masks(cfg.antenna.mask_levels)
        mask = masks[args.grip]
        ps = radio.PanelSet()
        d, r = args.panel, args.index
        gain = radio.rx_gains_local(ps, mask, *_body_angles(ps, az, el))[..., d - 1, r - 1]
        label = f"{args.grip}_p{d}_r{r}"
    radio.write_pattern_csv(args.out, az, el, gain, label)
    return 0


def _body_angles(ps: radio.PanelSet, az, el):
    return radio.panel_local_angles(ps, radio.direction_vector(az, el))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mpuesim")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("--config")
    r.add_argument("--seed", type=int)
    r.add_argument("--grip")
    r.add_argument("--op-db", type=float)
    r.add_argument("--ob-db", type=float)
    r.add_argument("--desk", action="store_true", help="105 UEs for 10 s")
    r.add_argument("--out", default="out")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="grip x offset x seed product")
    s.add_argument("--config")
    s.add_argument("--grips", nargs="+", default=list(radio.GRIPS))
    s.add_argument("--op-db", nargs="+", type=float, default=[0.0])
    s.add_argument("--ob-db", nargs="+", type=float, default=[0.0])
    s.add_argument("--seeds", type=int, default=1)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--desk", action="store_true", help="105 UEs for 10 s")
    s.add_argument("--out", default="out")
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("export-mask", help="write a grip mask as CSV")
    m.add_argument("--grip", required=True)
    m.add_argument("--config")
    m.add_argument("--res-deg", type=float, default=5.0)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_export_mask)

    lay = sub.add_parser("export-layout", help="write cell positions and azimuths as CSV")
    lay.add_argument("--config")
    lay.add_argument("--isd", type=float)
    lay.add_argument("--out", required=True)
    lay.set_defaults(func=cmd_export_layout)

    pat = sub.add_parser("export-pattern", help="azimuth cut of a Tx beam or panel Rx beam")
    pat.add_argument("kind", choices=["tx", "rx"])
    pat.add_argument("--index", type=int, default=1, help="Tx beam or Rx beam, 1-based")
    pat.add_argument("--panel", type=int, default=2)
    pat.add_argument("--grip", default="FREE")
    pat.add_argument("--el", type=float, default=0.0)
    pat.add_argument("--res-deg", type=float, default=1.0)
    pat.add_argument("--config")
    pat.add_argument("--out", required=True)
    pat.set_defaults(func=cmd_export_pattern)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for prob in exc.problems:
            print(f"config error: {prob}", file=sys.stderr)
        return 2
