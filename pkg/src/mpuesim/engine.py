"""Discrete-time scheduler binding layout, channel, measurements, MPUE selection and mobility."""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, channel, radio
from .config import SimConfig
from .geometry import build_hex_layout, wrap_position
from .kpi import EVENT_HEADER, KpiCounters, classify_fast_ho, format_summary, summary_row
from .measure import (LinkModel, cell_quality, db2lin, full_load_sinr_db, l3_update, lin2db,
                      mc_sinr_db, noise_floor_dbm, scheduled_beams)
from .mobility import ATTACHED_STATES, State, StepInputs, UeMobility
from .mpue import Cause, SwitchOffsets, best_panel_beam, select_serving_arrays

# positions are snapped to a dyadic grid so that a replica translation followed
# by wrapping reproduces the original coordinates bit for bit
_SNAP = 2.0 ** -20

_DRAW_CHUNK = 64


def ue_rng(seed: int, stream: int, uid: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream, uid])


def build_mask(cfg: SimConfig) -> radio.GripMask:
    a = cfg.antenna
    if a.mask_file is not None:
        return radio.read_mask_csv(a.mask_file, cfg.scenario.grip, a.mask_rotation)
    return radio.bundled_grip_masks(a.mask_levels)[cfg.scenario.grip]


def build_link_model(cfg: SimConfig, layout=None) -> LinkModel:
    s, ch = cfg.scenario, cfg.channel
    layout = layout or build_hex_layout(s.isd_m)
    sh_los = sh_nlos = None
    if ch.shadowing:
        rng = np.random.default_rng([s.seed, 2])
        sh_los = channel.ShadowField(layout, ch.sigma_los_db, ch.decorr_los_m, rng,
                                     n_fields=layout.n_cells, grid_step=ch.shadow_grid_m)
        sh_nlos = channel.ShadowField(layout, ch.sigma_nlos_db, ch.decorr_nlos_m, rng,
                                      n_fields=layout.n_cells, grid_step=ch.shadow_grid_m)
    return LinkModel(
        layout,
        radio.default_tx_grid(cfg.antenna.tx_outer_el_deg, cfg.antenna.tx_inner_el_deg),
        radio.PanelSet(),
        build_mask(cfg),
        fc_ghz=s.fc_ghz, h_bs=s.h_bs_m, h_ut=s.h_ut_m, tx_power_dbm=s.tx_power_dbm,
        los_mode=ch.los_mode,
        soft_los=channel.SoftLosParams(ch.los_d1_m, ch.los_d2_m, ch.los_window_m),
        shadow_los=sh_los, shadow_nlos=sh_nlos,
    )


def initial_drop(cfg: SimConfig, layout, uids) -> tuple[np.ndarray, np.ndarray]:
    """Per-UE drop (position, heading) from each UE's own stream, then the optional translation."""
    s = cfg.scenario
    uv = np.empty((len(uids), 2))
    heading = np.empty(len(uids))
    for i, u in enumerate(uids):
        g = ue_rng(s.seed, 0, u)
        uv[i] = g.random(2)
        heading[i] = g.uniform(0.0, 2 * np.pi)
    pos = wrap_position(uv @ layout.lattice_basis, layout)
    pos = np.round(pos / _SNAP) * _SNAP
    if s.translate:
        pos = wrap_position(pos + layout.replica_offsets[s.translate], layout)
        pos = np.round(pos / _SNAP) * _SNAP
    return pos, heading


@dataclass
class RunResult:
    counters: KpiCounters
    per_ue: list[KpiCounters]
    events: list[tuple]
    manifest: dict
    sim_time_s: float
    traces: dict = field(default_factory=dict)

    def summary(self) -> dict:
        s = self.manifest["config"]["scenario"]
        return summary_row(s["grip"], float(s["o_p_db"]), float(s["o_b_db"]), int(s["seed"]),
                           self.counters, self.sim_time_s)

    def summary_csv(self) -> str:
        return format_summary([self.summary()])

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(self.summary_csv())
        (out / "manifest.json").write_text(json.dumps(self.manifest, indent=2, sort_keys=True))
        _write_rows(out / "events.csv", EVENT_HEADER, self.events)
        for name, (header, rows) in self.traces.items():
            _write_rows(out / f"{name}.csv", header, rows)
        return out


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


class _L1Filter:
    """Per-UE linear moving average over the last ``n`` SSB tensors with resettable history."""

    def __init__(self, n: int, shape):
        self.n = n
        self.buf = np.zeros((n,) + tuple(shape))
        self.count = np.zeros(shape[0], dtype=int)
        self.slot = np.zeros(shape[0], dtype=int)

    def push(self, raw_dbm: np.ndarray) -> np.ndarray:
        u = np.arange(raw_dbm.shape[0])
        self.buf[self.slot, u] = db2lin(raw_dbm)
        self.slot = (self.slot + 1) % self.n
        self.count = np.minimum(self.count + 1, self.n)
        total = self.buf.sum(axis=0)
        return lin2db(total / self.count.reshape((-1,) + (1,) * (raw_dbm.ndim - 1)))

    def reset(self, u: int) -> None:
        self.buf[:, u] = 0.0
        self.count[u] = 0
        self.slot[u] = 0


def run(cfg: SimConfig, ue_order=None) -> RunResult:
    """Simulate one scenario.

    ``ue_order`` optionally permutes the UE identifiers in creation order; every
    UE draws from its own random streams, so per-UE results do not depend on it.
    """
    cfg.validate()
    s, me, mo = cfg.scenario, cfg.measure, cfg.mobility
    uids = list(range(s.n_ue)) if ue_order is None else [int(u) for u in ue_order]
    if sorted(uids) != list(range(s.n_ue)):
        raise ValueError("ue_order must be a permutation of range(n_ue)")

    model = build_link_model(cfg)
    layout = model.layout
    n_ue = len(uids)
    C, B, D, R = model.shape
    dt = s.dt_ms / 1000.0
    n_steps, ssb = cfg.n_steps, cfg.ssb_steps
    noise = noise_floor_dbm(me.bandwidth_hz, me.noise_figure_db)
    offsets = SwitchOffsets(s.o_p_db, s.o_b_db)
    speed = np.full(n_ue, s.speed_kmh / 3.6)

    pos, heading = initial_drop(cfg, layout, uids)

    fad = None
    if cfg.channel.fading:
        doppler = channel.doppler_hz(s.speed_kmh / 3.6, s.fc_ghz)
        theta = np.random.default_rng([s.seed, 5]).uniform(-np.pi, np.pi)
        n_links = C * B * (D if cfg.channel.fading_per_panel else 1)
        procs = [channel.FadingProcess(n_links, doppler, ue_rng(s.seed, 1, u),
                                       cfg.channel.n_sinusoids, np.float32, theta) for u in uids]
        fad = (procs[0].w_c, procs[0].w_s,
               np.concatenate([p.coef_c for p in procs]), np.concatenate([p.coef_s for p in procs]))
        del procs
    draw_rngs = [ue_rng(s.seed, 3, u) for u in uids]
    err_rngs = [ue_rng(s.seed, 4, u) for u in uids] if cfg.channel.meas_error_db > 0 else None
    draws_buf = None

    trace_ues = set(cfg.trace.ues)
    record_sel = cfg.trace.selection
    ues = [UeMobility(u, mo, s.dt_ms, C, offsets, record_changes=record_sel) for u in uids]
    l1f = _L1Filter(me.n_l1, (n_ue, C, B, D, R))
    l3_cell = np.full((n_ue, C), np.nan)
    l3_beams = np.full((n_ue, C, B), np.nan)
    l1 = l1_beams = best_dr = None
    scheduled = np.tile(np.arange(me.k_b) % B, (C, 1))
    panel_steps = np.zeros((n_ue, D), dtype=np.int64)
    uidx = np.arange(n_ue)
    meas_rows, chan_rows = [], []

    for n in range(n_steps):
        t_ms = n * s.dt_ms
        if n > 0:
            step = (speed * dt)[:, None] * np.column_stack([np.cos(heading), np.sin(heading)])
            pos = wrap_position(pos + step, layout)
        if n % ssb == 0:
            ls = model.large_scale(pos, heading)
        if fad is not None:
            fading = _fading_db(fad, n * dt).reshape(n_ue, C, B, -1)
            fading = np.broadcast_to(fading, (n_ue, C, B, D))
        else:
            fading = np.zeros((n_ue, C, B, D))

        if n % ssb == 0:
            raw = ls.tensor(fading[..., None])
            if err_rngs is not None:
                raw = raw + np.stack([g.normal(0.0, cfg.channel.meas_error_db, raw.shape[1:])
                                      for g in err_rngs])
            l1 = l1f.push(raw)
            d_c, r_c = best_panel_beam(l1)
            best_dr = np.stack([d_c, r_c], axis=-1)
            l1_beams = l1[uidx[:, None], np.arange(C)[None, :], :, d_c, r_c]  # (U, C, B)
            l3_beams = l3_update(l3_beams, l1_beams, me.l3_k)
            l3_cell = l3_update(l3_cell, cell_quality(l1_beams), me.l3_k)
            if cfg.trace.channel:
                _trace_channel(chan_rows, t_ms, uids, trace_ues, raw)

            if n == 0:
                for i, m in enumerate(ues):
                    m.initial_access(_inputs(i, None, l1, l1_beams, best_dr, l3_cell, l3_beams), t_ms)
                    m.filter_reset = False

            _serving_selection(ues, l1, offsets, t_ms)
            scheduled = _scheduled(ues, C, B, me.k_b)

        # SINR of every beam of each UE's cell of interest through its active panel / Rx beam
        ci = np.fromiter((m.interest[0] for m in ues), int, n_ue)
        di = np.fromiter((m.interest[1] for m in ues), int, n_ue)
        ri = np.fromiter((m.interest[2] for m in ues), int, n_ue)
        sl = (ls.base_dbm[:, :, None] + ls.tx_gain + ls.rx_gain[uidx, :, di, ri][:, :, None]
              + fading[uidx, :, :, di])
        if me.interference == "full":
            sinr = full_load_sinr_db(sl, ci, scheduled, noise)
        else:
            k = n % _DRAW_CHUNK
            if k == 0:
                draws_buf = np.stack([g.integers(0, me.k_b, (_DRAW_CHUNK, me.n_mc, C), dtype=np.int8)
                                      for g in draw_rngs])
            sinr = mc_sinr_db(sl, ci, scheduled, draws_buf[:, k], noise)

        for i, m in enumerate(ues):
            m.step(n, _inputs(i, sinr, l1, l1_beams, best_dr, l3_cell, l3_beams))
            if m.filter_reset:
                m.filter_reset = False
                l1f.reset(i)
                l3_cell[i] = np.nan
                l3_beams[i] = np.nan
            if m.state in ATTACHED_STATES:
                panel_steps[i, m.d0] += 1
            if cfg.trace.measurements and uids[i] in trace_ues:
                c0 = m.interest[0]
                for b in range(B):
                    meas_rows.append((t_ms, uids[i], c0, b + 1, float(l1_beams[i, c0, b]),
                                      float(l3_beams[i, c0, b]), float(sinr[i, b])))

    per_ue, events = _collect(ues, panel_steps, cfg)
    total = KpiCounters(n_ue=0, panel_steps=(0,) * D)
    for c in per_ue:
        total = total.merge(c)
    if n_steps == 0:
        total = dataclasses.replace(total, n_ue=n_ue)

    traces = {}
    if cfg.trace.measurements:
        traces["measurements"] = (("t_ms", "ue", "cell", "beam", "l1_dbm", "l3_dbm", "sinr_db"), meas_rows)
    if cfg.trace.channel:
        traces["channel"] = (("t_ms", "ue", "cell", "beam", "panel", "rxbeam", "rsrp_dbm"), chan_rows)
    if record_sel:
        rows = sorted((t, uids[i], d + 1, r + 1, Cause(c).name)
                      for i, m in enumerate(ues) if uids[i] in trace_ues for (t, d, r, c) in m.changes)
        traces["selection"] = (("t_ms", "ue", "panel", "rxbeam", "cause"), rows)

    manifest = {"config": cfg.to_dict(), "seed": s.seed, "version": __version__,
                "numpy": np.__version__, "n_steps": n_steps}
    return RunResult(total, per_ue, events, manifest, s.sim_time_s, traces)


def _fading_db(fad, t: float) -> np.ndarray:
    w_c, w_s, coef_c, coef_s = fad
    xc, xs = w_c * t, w_s * t
    bc = np.concatenate([np.cos(xc), np.sin(xc)]).astype(np.float32)
    bs = np.concatenate([np.cos(xs), np.sin(xs)]).astype(np.float32)
    gi = (coef_c @ bc).astype(float)
    gq = (coef_s @ bs).astype(float)
    return 10.0 * np.log10(np.maximum(gi * gi + gq * gq, 1e-30))


def _inputs(i, sinr, l1, l1_beams, best_dr, l3_cell, l3_beams) -> StepInputs:
    return StepInputs(sinr[i] if sinr is not None else None, l1[i], l1_beams[i], best_dr[i],
                      l3_cell[i], l3_beams[i])


def _serving_selection(ues, l1, offsets: SwitchOffsets, t_ms: float) -> None:
    """Panel / Rx-beam hysteresis selection followed by Tx beam management."""
    idx = [i for i, m in enumerate(ues) if m.state in ATTACHED_STATES]
    if not idx:
        return
    idx_a = np.array(idx)
    c0 = np.array([ues[i].c0 for i in idx])
    b0 = np.array([ues[i].b0 for i in idx])
    d0 = np.array([ues[i].d0 for i in idx])
    r0 = np.array([ues[i].r0 for i in idx])
    d, r, cause = select_serving_arrays(l1[idx_a, c0, b0], d0, r0, offsets.o_p, offsets.o_b)
    for j in np.flatnonzero(cause != Cause.NONE):
        ues[idx[j]].apply_selection(int(d[j]), int(r[j]), Cause(int(cause[j])), t_ms)

    for i in idx:
        m = ues[i]
        if m.state == State.BEAM_RECOVERY:
            continue
        vals = l1[i, m.c0, :, m.d0, m.r0]
        b = int(np.argmax(vals))
        if b != m.b0 and vals[b] > vals[m.b0]:
            m.change_tx_beam(b, l1[i, m.c0], t_ms)


def _scheduled(ues, n_cells: int, n_beams: int, k_b: int) -> np.ndarray:
    load = np.zeros((n_cells, n_beams), dtype=int)
    for m in ues:
        if m.state in ATTACHED_STATES:
            load[m.c0, m.b0] += 1
    return scheduled_beams(load, k_b)


def _trace_channel(rows, t_ms, uids, trace_ues, raw) -> None:
    for i, u in enumerate(uids):
        if u not in trace_ues:
            continue
        for (c, b, d, r), v in np.ndenumerate(raw[i]):
            rows.append((t_ms, u, c, b + 1, d + 1, r + 1, float(v)))


def _collect(ues, panel_steps, cfg: SimConfig):
    per_ue, events = [], []
    for i, m in enumerate(ues):
        labels = classify_fast_ho(m.ho_records, cfg.kpi.t_fh_s)
        ho_events = [e for e in m.events if e.kind == "HO"]
        extra = [(e.t_ms, m.uid, lab, e.src, e.dst, e.beam + 1)
                 for e, lab in zip(ho_events, labels) if lab]
        events.extend((e.t_ms, m.uid, e.kind, e.src, e.dst, e.beam + 1) for e in m.events)
        events.extend(extra)
        per_ue.append(KpiCounters(
            successful_hos=m.n_ho, hofs=m.n_hof, rlfs=m.n_rlf,
            ping_pongs=labels.count("PP"), short_stays=labels.count("SS"),
            panel_switches=m.panel_switches, rxbeam_switches=m.rxbeam_switches,
            beam_recoveries=m.n_bfr, outage_ms=m.outage_ms, n_ue=1,
            panel_steps=tuple(int(x) for x in panel_steps[i]),
        ))
    order = {"HO": 0, "PP": 1, "SS": 2, "HOF": 3, "RLF": 4, "BF_RECOVERY": 5}
    events.sort(key=lambda e: (e[0], e[1], order[e[2]]))
    return per_ue, events


# --------------------------------------------------------------------------- sweep


def scenario_grid(base: SimConfig, grips, o_p_list, o_b_list, seeds) -> list[SimConfig]:
    if not (grips and o_p_list and o_b_list and seeds):
        raise ValueError("sweep lists must be non-empty")
    return [base.with_scenario(grip=g, o_p_db=float(op), o_b_db=float(ob), seed=int(sd))
            for g, op, ob, sd in itertools.product(grips, o_p_list, o_b_list, seeds)]


def _summary_of(cfg: SimConfig) -> dict:
    return run(cfg).summary()


def sweep(base: SimConfig, grips, o_p_list, o_b_list, seeds, workers: int = 1) -> list[dict]:
    """Run the Cartesian product of scenarios; one summary row per run, in product order."""
    cfgs = scenario_grid(base, grips, o_p_list, o_b_list, seeds)
    for c in cfgs:
        c.validate()
    if workers <= 1:
        return [_summary_of(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as ex:
        return list(ex.map(_summary_of, cfgs))
