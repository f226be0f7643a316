"""Link budget assembly, L1/L3 filtering and the Monte-Carlo downlink SINR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel, radio
from .geometry import NetworkLayout, UEKinematics, wrap_displacement


_LN10_10 = np.log(10.0) / 10.0


def db2lin(x):
    return np.exp(np.asarray(x) * _LN10_10)


def lin2db(x):
    return 10.0 * np.log10(x)


def noise_floor_dbm(bandwidth_hz: float = 100e6, noise_figure_db: float = 10.0) -> float:
    return -174.0 + 10.0 * np.log10(bandwidth_hz) + noise_figure_db


def link_budget_dbm(tx_power_dbm, tx_gain_db, path_loss_db, shadow_db, fading_db, rx_gain_db):
    return tx_power_dbm + tx_gain_db - path_loss_db - shadow_db + fading_db + rx_gain_db


@dataclass
class LargeScale:
    """Per-step deterministic link terms for a UE population.

    ``base_dbm`` (U, C) is Tx power minus path loss and shadowing, ``tx_gain``
    (U, C, B) and ``rx_gain`` (U, C, D, R) are antenna gains in dB.
    """

    base_dbm: np.ndarray
    tx_gain: np.ndarray
    rx_gain: np.ndarray
    d2d: np.ndarray
    w_los: np.ndarray

    def tensor(self, fading_db=0.0) -> np.ndarray:
        """Raw RSRP (U, C, B, D, R) in dBm."""
        t = (self.base_dbm[:, :, None, None, None] + self.tx_gain[:, :, :, None, None]
             + self.rx_gain[:, :, None, :, :])
        return t + fading_db

    def slice(self, d, r, fading_db=0.0) -> np.ndarray:
        """Raw RSRP (U, C, B) through per-UE panel ``d`` and Rx beam ``r`` (0-based arrays)."""
        u = np.arange(self.base_dbm.shape[0])
        rx = self.rx_gain[u, :, d, r]  # (U, C)
        return self.base_dbm[:, :, None] + self.tx_gain + rx[:, :, None] + fading_db


class LinkModel:
    """Geometry, antennas and large-scale channel bound together."""

    def __init__(self, layout: NetworkLayout, tx_grid: radio.TxBeamGrid, panel_set: radio.PanelSet,
                 mask: radio.GripMask | None, *, fc_ghz: float = 28.0, h_bs: float = 10.0,
                 h_ut: float = 1.5, tx_power_dbm: float = 40.0, los_mode: str = "soft",
                 soft_los: channel.SoftLosParams = channel.SoftLosParams(),
                 shadow_los: channel.ShadowField | None = None,
                 shadow_nlos: channel.ShadowField | None = None):
        if los_mode not in ("soft", "los", "nlos"):
            raise ValueError(f"unknown los_mode {los_mode!r}")
        self.layout = layout
        self.tx_grid = tx_grid
        self.panel_set = panel_set
        self.mask = mask
        self.fc_ghz = fc_ghz
        self.h_bs = h_bs
        self.h_ut = h_ut
        self.tx_power_dbm = tx_power_dbm
        self.los_mode = los_mode
        self.soft_los = soft_los
        self.shadow_los = shadow_los
        self.shadow_nlos = shadow_nlos
        self._grip_rot = mask.rotation_matrix if mask is not None else np.eye(3)

    @property
    def shape(self):
        return (self.layout.n_cells, self.tx_grid.n_beams, self.panel_set.n_panels,
                self.panel_set.n_rx_beams)

    def ue_rotations(self, heading) -> np.ndarray:
        """Body-to-global rotation per UE: heading yaw then the grip rotation."""
        h = np.asarray(heading, dtype=float)
        c, s = np.cos(h), np.sin(h)
        rz = np.zeros(h.shape + (3, 3))
        rz[..., 0, 0], rz[..., 0, 1] = c, -s
        rz[..., 1, 0], rz[..., 1, 1] = s, c
        rz[..., 2, 2] = 1.0
        return rz @ self._grip_rot

    def large_scale(self, pos, heading) -> LargeScale:
        pos = np.asarray(pos, dtype=float)
        lay = self.layout
        disp_site = wrap_displacement(pos[:, None, :], lay.sites[None, :, :], lay)  # UE -> site
        disp = disp_site[:, lay.cell_site, :]
        dh = self.h_bs - self.h_ut
        d2d = np.hypot(disp[..., 0], disp[..., 1])
        d3d = np.sqrt(d2d ** 2 + dh ** 2)

        # departure angles in each cell's frame
        az_dep = np.rad2deg(np.arctan2(-disp[..., 1], -disp[..., 0])) - lay.cell_azimuth
        el_dep = -np.rad2deg(np.arctan2(dh, d2d))
        tx_g = radio.tx_gains(self.tx_grid, az_dep, el_dep)

        # arrival direction at the UE
        v = np.stack([disp[..., 0], disp[..., 1], np.full_like(d2d, dh)], axis=-1) / d3d[..., None]
        rot = self.ue_rotations(heading)[:, None]  # (U,1,3,3)
        rx_g = radio.rx_gains(self.panel_set, self.mask, v, rot)

        if self.los_mode == "soft":
            w = channel.soft_los_weight(d2d, self.soft_los)
        else:
            w = np.full_like(d2d, 1.0 if self.los_mode == "los" else 0.0)
        pl = channel.path_loss(d3d, self.fc_ghz, w, self.h_bs, self.h_ut)
        sf = np.zeros_like(pl)
        if self.shadow_los is not None:
            sf = sf + w * self.shadow_los(pos)
        if self.shadow_nlos is not None:
            sf = sf + (1 - w) * self.shadow_nlos(pos)
        base = self.tx_power_dbm - pl - sf
        return LargeScale(base, tx_g, rx_g, d2d, w)


def raw_rsrp(model: LinkModel, ue: UEKinematics, c: int, b: int, d: int, r: int,
             fading_db: float = 0.0) -> float:
    """Raw RSRP (dBm) of one link; ``c``, ``b``, ``d``, ``r`` are 0-based."""
    ls = model.large_scale(np.array([ue.position]), np.array([ue.heading]))
    return float(ls.tensor()[0, c, b, d, r] + fading_db)


# --------------------------------------------------------------------------- filtering


def l1_filter(window) -> float | np.ndarray:
    """Linear-power average of the raw samples in ``window`` (axis 0), in dBm."""
    w = np.asarray(window, dtype=float)
    if w.ndim == 0 or w.shape[0] == 0:
        raise ValueError("empty L1 window")
    return lin2db(db2lin(w).mean(axis=0))


def l3_coefficient(k: float) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    return 1.0 / 2.0 ** (k / 4.0)


def l3_update(prev, meas, k: float = 4.0):
    """3GPP layer-3 filter in the dB domain; NaN ``prev`` seeds with ``meas``."""
    a = l3_coefficient(k)
    prev = np.asarray(prev, dtype=float)
    meas = np.asarray(meas, dtype=float)
    return np.where(np.isnan(prev), meas, (1.0 - a) * prev + a * meas)


def l1_beam_rsrp_per_cell(tensor_c, d_c: int, r_c: int) -> np.ndarray:
    """L1 beam RSRPs of one cell, read through its best panel / Rx beam. ``tensor_c`` is (B, D, R)."""
    return np.asarray(tensor_c)[:, d_c, r_c]


def cell_quality(l1_beams) -> np.ndarray:
    """Cell quality input from L1 beam RSRPs (..., B): the strongest beam."""
    return np.max(l1_beams, axis=-1)


# --------------------------------------------------------------------------- SINR


def scheduled_beams(attached, k: int = 4) -> np.ndarray:
    """Indices of the ``k`` beams with most attached UEs per cell; ties to the lower index."""
    attached = np.asarray(attached)
    return np.argsort(-attached, axis=-1, kind="stable")[..., :k]


def mc_sinr_db(slice_dbm, cell, scheduled, draws, noise_dbm: float) -> np.ndarray:
    """Monte-Carlo SINR for every beam of each UE's cell of interest.

    slice_dbm : (U, C, B) raw RSRP through the UE's active panel / Rx beam.
    cell      : (U,) cell whose beams are the desired signal.
    scheduled : (C, K) scheduled beam indices per cell.
    draws     : (U, N, C) indices into ``scheduled`` for each Monte-Carlo draw.
    Returns (U, B) SINR in dB, linear mean over the N draws.
    """
    lin = db2lin(slice_dbm)
    n_ue, n_cell, _ = lin.shape
    u = np.arange(n_ue)
    c_idx = np.arange(n_cell)
    beam = scheduled[c_idx[None, None, :], draws]  # (U, N, C)
    interf = lin[u[:, None, None], c_idx[None, None, :], beam]
    interf = np.where(c_idx[None, None, :] == np.asarray(cell)[:, None, None], 0.0, interf)
    total = db2lin(noise_dbm) + interf.sum(axis=-1)  # (U, N)
    sig = lin[u, cell]  # (U, B)
    return lin2db(np.mean(sig[:, None, :] / total[:, :, None], axis=1))


def full_load_sinr_db(slice_dbm, cell, scheduled, noise_dbm: float) -> np.ndarray:
    """SINR with every scheduled beam of every other cell transmitting at once.

    Same shapes as :func:`mc_sinr_db` minus the draws; deterministic.
    """
    lin = db2lin(slice_dbm)
    n_ue, n_cell, _ = lin.shape
    u = np.arange(n_ue)
    per_cell = lin[:, np.arange(n_cell)[:, None], scheduled].sum(axis=-1)  # (U, C)
    per_cell[u, cell] = 0.0
    total = db2lin(noise_dbm) + per_cell.sum(axis=-1)
    return lin2db(lin[u, cell] / total[:, None])


def sinr_db(slice_dbm, c: int, scheduled, noise_dbm: float, rng: np.random.Generator,
            n_mc: int = 20) -> np.ndarray:
    """SINR (dB) of every beam of cell ``c`` for one UE; ``slice_dbm`` is (C, B)."""
    slice_dbm = np.asarray(slice_dbm, dtype=float)
    scheduled = np.asarray(scheduled)
    draws = rng.integers(0, scheduled.shape[1], (1, n_mc, slice_dbm.shape[0]))
    return mc_sinr_db(slice_dbm[None], np.array([c]), scheduled, draws, noise_dbm)[0]
