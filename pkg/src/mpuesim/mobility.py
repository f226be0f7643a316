"""Per-UE connection state machine: A3 handover, beam failure recovery, HOF/RLF, re-establishment.

Time is counted in simulation steps of ``dt_ms``; all ``*_ms`` settings are
converted to whole steps (rounded up).  Cell, beam, panel and Rx-beam
indices are 0-based.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .mpue import (Cause, SwitchOffsets, is_counted_panel_switch, is_counted_rxbeam_switch,
                   select_serving_arrays)


class State(enum.IntEnum):
    CONNECTED = 0
    TTT_RUNNING = 1
    HO_PREPARED = 2
    RA_TO_TARGET = 3
    BEAM_RECOVERY = 4
    REESTABLISHMENT = 5


ATTACHED_STATES = (State.CONNECTED, State.TTT_RUNNING, State.HO_PREPARED, State.BEAM_RECOVERY)


@dataclass(frozen=True)
class MobilityConfig:
    a3_offset_db: float = 2.0
    ttt_ms: float = 80.0
    gamma_out_db: float = -8.0
    t_hof_ms: float = 200.0
    t_rlf_ms: float = 1000.0
    n_batt: int = 4
    t_batt_ms: float = 40.0
    n_prep: int = 4
    prep_delay_ms: float = 20.0
    ra_window_ms: float = 10.0
    ra_outage_ms: float = 55.0
    reest_outage_ms: float = 180.0
    target_rx_acquisition: bool = True

    def problems(self, dt_ms: float) -> list[str]:
        out = []
        for name in ("ttt_ms", "t_hof_ms", "t_rlf_ms", "t_batt_ms", "ra_window_ms",
                     "ra_outage_ms", "reest_outage_ms"):
            if getattr(self, name) <= 0:
                out.append(f"mobility.{name} must be positive")
        if self.prep_delay_ms < 0:
            out.append("mobility.prep_delay_ms must be >= 0")
        if self.ttt_ms > 0 and not _is_multiple(self.ttt_ms, dt_ms):
            out.append(f"mobility.ttt_ms={self.ttt_ms} is not a multiple of dt_ms={dt_ms}")
        if self.n_batt < 1:
            out.append("mobility.n_batt must be >= 1")
        if self.n_prep < 1:
            out.append("mobility.n_prep must be >= 1")
        if self.ra_outage_ms >= self.reest_outage_ms:
            out.append("mobility.ra_outage_ms must be smaller than reest_outage_ms")
        return out


def _is_multiple(x: float, dt: float) -> bool:
    q = x / dt
    return abs(q - round(q)) < 1e-9


def to_steps(ms: float, dt_ms: float) -> int:
    return max(1, int(math.ceil(ms / dt_ms - 1e-9)))


# --------------------------------------------------------------------------- pure steps


def a3_update(counters, l3_cell, serving, offset_db: float, ttt_steps: int):
    """Advance the per-neighbour A3 time-to-trigger counters by one step.

    The entering condition ``L3[serving] + offset < L3[c]`` is strict and must
    hold on consecutive steps; any failure resets that neighbour's counter.
    Returns ``(counters, target)`` with ``target = -1`` when nothing fires, else
    the strongest neighbour whose counter reached ``ttt_steps``.
    """
    l3 = np.asarray(l3_cell, dtype=float)
    counters = np.asarray(counters)
    cond = l3 > l3[serving] + offset_db
    cond[serving] = False
    counters = np.where(cond, counters + 1, 0)
    fired = counters >= ttt_steps
    if not fired.any():
        return counters, -1
    return counters, int(np.argmax(np.where(fired, l3, -np.inf)))


def ho_prepare(l3_beams, n_prep: int) -> np.ndarray:
    """Beams of the target with CFRA resources: top ``n_prep`` by reported L3 value."""
    v = np.asarray(l3_beams, dtype=float)
    if v.size == 0 or np.all(np.isnan(v)):
        return np.array([], dtype=int)
    order = np.argsort(-np.nan_to_num(v, nan=-np.inf), kind="stable")
    return order[:n_prep]


def rlf_update(counter: int, sinr_db: float, gamma_out_db: float, rlf_steps: int):
    """Consecutive-below-threshold counter; returns ``(counter, rlf)``."""
    counter = counter + 1 if sinr_db < gamma_out_db else 0
    return counter, counter >= rlf_steps


def ra_outcome(sinr_trace, gamma_out_db: float, hof_steps: int, window_steps: int = 1):
    """Outcome of random access over a scripted per-step target SINR trace.

    Returns ``("HO", k)`` when ``window_steps`` consecutive samples reach the
    threshold (``k`` is the 1-based step of completion) or ``("HOF", hof_steps)``.
    """
    good = 0
    for k, s in enumerate(sinr_trace[:hof_steps], start=1):
        good = good + 1 if s >= gamma_out_db else 0
        if good >= window_steps:
            return "HO", k
    return "HOF", hof_steps


# --------------------------------------------------------------------------- state machine


@dataclass
class StepInputs:
    """Measurements handed to a UE for one step.

    sinr      : (B,) SINR of every beam of the cell of interest (serving cell,
                or the HO target during random access) through the active
                panel / Rx beam.
    l1        : (C, B, D, R) latest L1 beam-panel RSRPs.
    l1_beams  : (C, B) L1 beam RSRPs through each cell's best panel / Rx beam.
    best_dr   : (C, 2) best (panel, Rx beam) per cell.
    l3_cell, l3_beams : L3 cell quality (C,) and beam values (C, B).
    """

    sinr: np.ndarray
    l1: np.ndarray
    l1_beams: np.ndarray
    best_dr: np.ndarray
    l3_cell: np.ndarray
    l3_beams: np.ndarray


@dataclass
class Event:
    t_ms: float
    kind: str
    src: int
    dst: int
    beam: int


class UeMobility:
    def __init__(self, uid: int, cfg: MobilityConfig, dt_ms: float, n_cells: int,
                 offsets: SwitchOffsets = SwitchOffsets(), record_changes: bool = False):
        self.uid = uid
        self.cfg = cfg
        self.offsets = offsets
        self.dt_ms = dt_ms
        self.ttt_steps = to_steps(cfg.ttt_ms, dt_ms)
        self.rlf_steps = to_steps(cfg.t_rlf_ms, dt_ms)
        self.hof_steps = to_steps(cfg.t_hof_ms, dt_ms)
        self.batt_steps = to_steps(cfg.t_batt_ms, dt_ms)
        self.ra_window_steps = to_steps(cfg.ra_window_ms, dt_ms)
        self.prep_steps = int(math.ceil(cfg.prep_delay_ms / dt_ms - 1e-9))
        self.reest_steps = to_steps(cfg.reest_outage_ms, dt_ms)

        self.state = State.REESTABLISHMENT
        self.c0 = self.b0 = self.d0 = self.r0 = 0
        self.a3_counters = np.zeros(n_cells, dtype=int)
        self.rlf_count = 0
        self.bfr_attempts = 0
        self.bfr_next = 0
        self.prep_left = 0
        self.target = -1
        self.b_prep = np.array([], dtype=int)
        self.target_dr = (0, 0)
        self.hof_left = 0
        self.ra_good = 0
        self.reest_left = 0

        self.outage_ms = 0.0
        self.low_sinr_ms = 0.0
        self.n_ho = self.n_hof = self.n_rlf = self.n_bfr = 0
        self.panel_switches = 0
        self.rxbeam_switches = 0
        self.ho_records: list[tuple[float, int, int]] = []
        self.events: list[Event] = []
        self.record_changes = record_changes
        self.changes: list[tuple[float, int, int, Cause]] = []
        self.filter_reset = False

    # ------------------------------------------------------------------ helpers

    @property
    def attached(self) -> bool:
        return self.state in ATTACHED_STATES

    @property
    def interest(self) -> tuple[int, int, int]:
        """(cell, panel, Rx beam) whose SINR the UE needs this step."""
        if self.state == State.RA_TO_TARGET:
            return self.target, self.target_dr[0], self.target_dr[1]
        return self.c0, self.d0, self.r0

    def apply_selection(self, d: int, r: int, cause: Cause, t_ms: float) -> None:
        if d == self.d0 and r == self.r0:
            return
        pc = d != self.d0
        rc = r != self.r0
        self.panel_switches += int(is_counted_panel_switch(pc, cause))
        self.rxbeam_switches += int(is_counted_rxbeam_switch(pc, rc, cause))
        self.d0, self.r0 = int(d), int(r)
        if self.record_changes:
            self.changes.append((t_ms, self.d0, self.r0, Cause(cause)))

    def change_tx_beam(self, b: int, l1_c0: np.ndarray, t_ms: float) -> None:
        """Intra-cell serving beam change followed by the panel / Rx-beam reselection."""
        self.b0 = int(b)
        d, r, cause = select_serving_arrays(l1_c0[b], self.d0, self.r0, self.offsets.o_p,
                                             self.offsets.o_b)
        if cause != Cause.NONE:
            self.apply_selection(int(d), int(r), Cause.TX_BEAM_CHANGE, t_ms)

    def _connect(self, c: int, b: int, d: int, r: int, cause: Cause, t_ms: float) -> None:
        self.c0, self.b0 = int(c), int(b)
        self.apply_selection(d, r, cause, t_ms)
        self.state = State.CONNECTED
        self.a3_counters[:] = 0
        self.rlf_count = 0
        self.target = -1
        self.b_prep = np.array([], dtype=int)
        self.filter_reset = True

    def initial_access(self, inp: StepInputs, t_ms: float = 0.0) -> None:
        self._reconnect(inp, t_ms)

    def _reconnect(self, inp: StepInputs, t_ms: float) -> None:
        c = int(np.nanargmax(inp.l3_cell)) if not np.all(np.isnan(inp.l3_cell)) else 0
        b = int(np.argmax(inp.l1_beams[c]))
        p = inp.l1[c, b]
        k = int(np.argmax(p))
        self._connect(c, b, k // p.shape[1], k % p.shape[1], Cause.INITIAL, t_ms)

    def _failure(self, kind: str, t_ms: float, dst: int = -1) -> None:
        self.events.append(Event(t_ms, kind, self.c0, dst, self.b0))
        if kind == "HOF":
            self.n_hof += 1
        else:
            self.n_rlf += 1
        self.outage_ms += self.cfg.reest_outage_ms
        self.state = State.REESTABLISHMENT
        self.reest_left = self.reest_steps
        self.rlf_count = 0
        self.a3_counters[:] = 0
        self.target = -1
        self.b_prep = np.array([], dtype=int)

    # ------------------------------------------------------------------ step

    def step(self, n: int, inp: StepInputs) -> None:
        cfg = self.cfg
        t_ms = n * self.dt_ms
        st = self.state

        if st == State.REESTABLISHMENT:
            self.reest_left -= 1
            if self.reest_left <= 0:
                self._reconnect(inp, t_ms)
            return

        if st == State.RA_TO_TARGET:
            self._ra_step(t_ms, inp)
            return

        # attached: serving-link monitoring
        s = float(inp.sinr[self.b0])
        if s < cfg.gamma_out_db:
            self.outage_ms += self.dt_ms
            self.low_sinr_ms += self.dt_ms
        self.rlf_count, rlf = rlf_update(self.rlf_count, s, cfg.gamma_out_db, self.rlf_steps)
        if rlf:
            self._failure("RLF", t_ms)
            return

        if st in (State.CONNECTED, State.TTT_RUNNING) and s < cfg.gamma_out_db:
            self.state = st = State.BEAM_RECOVERY
            self.bfr_attempts = 0
            self.bfr_next = n

        if st == State.BEAM_RECOVERY:
            if n >= self.bfr_next:
                if self.bfr_attempts >= cfg.n_batt:
                    self._failure("RLF", t_ms)
                    return
                self.bfr_attempts += 1
                cand = int(np.argmax(inp.l1_beams[self.c0]))
                if inp.sinr[cand] >= cfg.gamma_out_db:
                    self.n_bfr += 1
                    self.events.append(Event(t_ms, "BF_RECOVERY", self.c0, self.c0, cand))
                    if cand != self.b0:
                        self.change_tx_beam(cand, inp.l1[self.c0], t_ms)
                    self.state = State.CONNECTED
                    self.rlf_count = 0
                else:
                    self.bfr_next = n + self.batt_steps
            return

        if st == State.HO_PREPARED:
            self.prep_left -= 1
            if self.prep_left <= 0:
                self._ho_command(inp)
            return

        # CONNECTED / TTT_RUNNING
        self.a3_counters, target = a3_update(self.a3_counters, inp.l3_cell, self.c0,
                                             cfg.a3_offset_db, self.ttt_steps)
        if target >= 0:
            b_prep = ho_prepare(inp.l3_beams[target], cfg.n_prep)
            self.a3_counters[:] = 0
            if b_prep.size:
                self.target = target
                self.b_prep = b_prep
                self.state = State.HO_PREPARED
                self.prep_left = self.prep_steps
                if self.prep_left <= 0:
                    self._ho_command(inp)
                return
        self.state = State.TTT_RUNNING if self.a3_counters.any() else State.CONNECTED

    def _ho_command(self, inp: StepInputs) -> None:
        if self.cfg.target_rx_acquisition:
            d, r = inp.best_dr[self.target]
            self.target_dr = (int(d), int(r))
        else:
            self.target_dr = (self.d0, self.r0)
        self.state = State.RA_TO_TARGET
        self.hof_left = self.hof_steps
        self.ra_good = 0

    def ra_beam(self, inp: StepInputs) -> int:
        vals = inp.l1_beams[self.target][self.b_prep]
        return int(self.b_prep[int(np.argmax(vals))])

    def _ra_step(self, t_ms: float, inp: StepInputs) -> None:
        if self.b_prep.size == 0:
            self._failure("HOF", t_ms, self.target)
            return
        b = self.ra_beam(inp)
        if inp.sinr[b] >= self.cfg.gamma_out_db:
            self.ra_good += 1
        else:
            self.ra_good = 0
        if self.ra_good >= self.ra_window_steps:
            src = self.c0
            self.n_ho += 1
            self.outage_ms += self.cfg.ra_outage_ms
            self.ho_records.append((t_ms / 1000.0, src, self.target))
            self.events.append(Event(t_ms, "HO", src, self.target, b))
            d, r = self.target_dr
            self._connect(self.target, b, d, r, Cause.HO, t_ms)
            return
        self.hof_left -= 1
        if self.hof_left <= 0:
            self._failure("HOF", t_ms, self.target)
