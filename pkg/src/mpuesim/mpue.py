"""Serving / best panel and Rx-beam selection with switching-offset hysteresis.

Panel and Rx-beam indices are 0-based throughout this module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Cause(enum.IntEnum):
    NONE = 0
    INITIAL = 1
    PANEL_SWITCH = 2
    RXBEAM_SWITCH = 3
    HO = 4
    TX_BEAM_CHANGE = 5


@dataclass(frozen=True)
class SwitchOffsets:
    o_p: float = 0.0
    o_b: float = 0.0

    def __post_init__(self):
        if self.o_p < 0 or self.o_b < 0:
            raise ValueError("switching offsets must be non-negative")


@dataclass(frozen=True)
class ServingSelection:
    d0: int
    r0: int
    changed_at: float | None = None
    cause: Cause = Cause.INITIAL


def best_panel_beam(tensor):
    """Argmax over (b, d, r) of ``tensor (..., B, D, R)`` -> ``(d, r)`` arrays.

    Ties resolve to the lowest panel, then lowest Rx beam, then lowest Tx beam.
    """
    t = np.asarray(tensor)
    b, d, r = t.shape[-3:]
    flat = np.moveaxis(t, -3, -1).reshape(t.shape[:-3] + (d * r * b,))
    k = np.argmax(flat, axis=-1)
    return k // (r * b), (k // b) % r


def panel_beam_argmax(p):
    """Argmax over (d, r) of ``p (..., D, R)``; lowest ``d`` then ``r`` on ties."""
    p = np.asarray(p)
    k = np.argmax(p.reshape(p.shape[:-2] + (-1,)), axis=-1)
    return k // p.shape[-1], k % p.shape[-1]


def select_serving_arrays(p, d0, r0, o_p: float = 0.0, o_b: float = 0.0):
    """Vectorised hysteresis selection.

    ``p`` is (..., D, R) L1 RSRP of the serving Tx beam; ``d0``/``r0`` the
    incumbent.  Returns ``(d, r, cause)`` where cause is a :class:`Cause` code.
    A challenger panel must beat the best Rx beam of the incumbent panel by
    more than ``o_p``; within the kept panel a challenger Rx beam must beat the
    incumbent Rx beam by more than ``o_b``.
    """
    p = np.asarray(p, dtype=float)
    d0 = np.asarray(d0)
    r0 = np.asarray(r0)
    ds, rs = panel_beam_argmax(p)
    p_star = np.take_along_axis(p.reshape(p.shape[:-2] + (-1,)),
                                (ds * p.shape[-1] + rs)[..., None], axis=-1)[..., 0]
    on_d0 = np.take_along_axis(p, d0[..., None, None], axis=-2)[..., 0, :]  # (..., R)
    best_on_d0 = on_d0.max(axis=-1)
    panel_sw = (ds != d0) & (p_star > best_on_d0 + o_p)

    r_best = np.argmax(on_d0, axis=-1)
    p_r0 = np.take_along_axis(on_d0, r0[..., None], axis=-1)[..., 0]
    rx_sw = ~panel_sw & (r_best != r0) & (best_on_d0 > p_r0 + o_b)

    d = np.where(panel_sw, ds, d0)
    r = np.where(panel_sw, rs, np.where(rx_sw, r_best, r0))
    cause = np.where(panel_sw, Cause.PANEL_SWITCH, np.where(rx_sw, Cause.RXBEAM_SWITCH, Cause.NONE))
    return d, r, cause


def select_serving(p, current: ServingSelection, offsets: SwitchOffsets = SwitchOffsets(),
                   t: float | None = None) -> ServingSelection:
    d, r, cause = select_serving_arrays(p, current.d0, current.r0, offsets.o_p, offsets.o_b)
    cause = Cause(int(cause))
    if cause == Cause.NONE:
        return current
    return ServingSelection(int(d), int(r), t, cause)


@dataclass(frozen=True)
class SelectionChange:
    t: float
    old_panel: int
    old_rxbeam: int
    new_panel: int
    new_rxbeam: int
    cause: Cause


_NOT_PANEL = (Cause.HO, Cause.TX_BEAM_CHANGE, Cause.INITIAL)
_NOT_RXBEAM = (Cause.HO, Cause.PANEL_SWITCH, Cause.INITIAL)


def is_counted_panel_switch(panel_changed, cause) -> np.ndarray:
    """Panel changes not caused by an HO, a Tx beam change or (re)connection."""
    return np.asarray(panel_changed) & ~np.isin(np.asarray(cause), _NOT_PANEL)


def is_counted_rxbeam_switch(panel_changed, rx_changed, cause) -> np.ndarray:
    """Rx-beam switches within an unchanged panel that were not caused by an HO."""
    return (np.asarray(rx_changed) & ~np.asarray(panel_changed)
            & ~np.isin(np.asarray(cause), _NOT_RXBEAM))


def switch_accounting(history) -> tuple[int, int]:
    """Counted (panel switches, Rx-beam switches) from a list of :class:`SelectionChange`."""
    if not history:
        return 0, 0
    pc = np.array([h.new_panel != h.old_panel for h in history])
    rc = np.array([h.new_rxbeam != h.old_rxbeam for h in history])
    cause = np.array([int(h.cause) for h in history])
    return (int(is_counted_panel_switch(pc, cause).sum()),
            int(is_counted_rxbeam_switch(pc, rc, cause).sum()))
