"""Mobility KPIs: fast-HO classification, per-UE-per-minute normalisation and outage percentage."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, fields

import numpy as np

SUMMARY_HEADER = ("grip", "o_p_db", "o_b_db", "seed", "ho_per_ue_min", "failures_per_ue_min",
                  "fastho_per_ue_min", "panelsw_per_ue_min", "rxbeamsw_per_ue_min", "outage_pct")

EVENT_HEADER = ("t_ms", "ue", "event", "src_cell", "dst_cell", "beam")


def classify_fast_ho(history, t_fh: float = 1.0) -> list[str]:
    """Label consecutive successful-HO pairs as ping-pong, short-stay or nothing.

    ``history`` is a chronologically ordered list of ``(t_s, src, dst)``.  The
    returned list has one label per HO: the second HO of a classified pair
    carries ``"PP"`` or ``"SS"``, every other HO ``""``.  A classified pair
    consumes both of its HOs, so windows never overlap.
    """
    labels = [""] * len(history)
    i = 0
    while i + 1 < len(history):
        t1, a, b = history[i]
        t2, b2, c = history[i + 1]
        if b2 == b and t2 - t1 < t_fh:
            labels[i + 1] = "PP" if c == a else "SS"
            i += 2
        else:
            i += 1
    return labels


def outage_percent(outage_ms, n_ue: int, sim_time_s: float) -> float:
    """Total outage over all UEs relative to the total UE time, in percent."""
    if sim_time_s <= 0:
        raise ValueError("simulated time must be positive")
    if n_ue <= 0:
        raise ValueError("n_ue must be positive")
    total = float(np.sum(outage_ms))
    return total / (n_ue * sim_time_s * 1000.0) * 100.0


def normalize(count, n_ue: int, sim_time_s: float) -> float:
    """Events per UE per minute."""
    if sim_time_s <= 0:
        raise ValueError("simulated time must be positive")
    if n_ue <= 0:
        raise ValueError("n_ue must be positive")
    return count / n_ue / (sim_time_s / 60.0)


@dataclass
class KpiCounters:
    """Additive event counters; ``merge`` is associative and commutative."""

    successful_hos: int = 0
    hofs: int = 0
    rlfs: int = 0
    ping_pongs: int = 0
    short_stays: int = 0
    panel_switches: int = 0
    rxbeam_switches: int = 0
    beam_recoveries: int = 0
    outage_ms: float = 0.0
    n_ue: int = 0
    panel_steps: tuple[int, ...] = (0, 0, 0)

    @property
    def mobility_failures(self) -> int:
        return self.hofs + self.rlfs

    @property
    def fast_hos(self) -> int:
        return self.ping_pongs + self.short_stays

    def merge(self, other: "KpiCounters") -> "KpiCounters":
        kw = {}
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if f.name == "panel_steps":
                n = max(len(a), len(b))
                a = tuple(a) + (0,) * (n - len(a))
                b = tuple(b) + (0,) * (n - len(b))
                kw[f.name] = tuple(x + y for x, y in zip(a, b))
            else:
                kw[f.name] = a + b
        return KpiCounters(**kw)

    __add__ = merge

    def panel_stay_pct(self) -> np.ndarray:
        s = np.asarray(self.panel_steps, dtype=float)
        tot = s.sum()
        return s / tot * 100.0 if tot > 0 else np.zeros_like(s)

    def per_ue_min(self, sim_time_s: float) -> dict[str, float]:
        n, t = self.n_ue, sim_time_s
        return {
            "ho_per_ue_min": normalize(self.successful_hos, n, t),
            "failures_per_ue_min": normalize(self.mobility_failures, n, t),
            "fastho_per_ue_min": normalize(self.fast_hos, n, t),
            "panelsw_per_ue_min": normalize(self.panel_switches, n, t),
            "rxbeamsw_per_ue_min": normalize(self.rxbeam_switches, n, t),
            "outage_pct": outage_percent(self.outage_ms, n, t),
        }


def summary_row(grip: str, o_p_db: float, o_b_db: float, seed: int, counters: KpiCounters,
                sim_time_s: float) -> dict:
    row = {"grip": grip, "o_p_db": o_p_db, "o_b_db": o_b_db, "seed": seed}
    if sim_time_s > 0 and counters.n_ue > 0:
        row.update(counters.per_ue_min(sim_time_s))
    else:
        row.update({k: 0.0 for k in SUMMARY_HEADER[4:]})
    return row


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_summary(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in SUMMARY_HEADER])
    return buf.getvalue()


def write_summary_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_summary(rows))
