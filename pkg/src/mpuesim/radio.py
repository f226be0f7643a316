"""Antenna gains: gNB Tx beam grid, three-panel UE Rx beams and hand-grip masks.

Angle conventions: azimuth is measured counter-clockwise from the local
boresight, elevation is measured from the local horizon (positive up).
All angles at the API surface are degrees.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GRIPS = ("FREE", "RHB", "DHS", "DHG")

# dB depths of the named blockage levels
BLOCKAGE_LEVELS = {"light": 5.0, "moderate": 10.0, "partial": 15.0, "strong": 20.0, "deep": 30.0}


@dataclass(frozen=True)
class ElementPattern:
    """3GPP-style single element: parabolic cuts in dB, clipped."""

    hpbw_az: float = 65.0
    hpbw_el: float = 65.0
    g_max: float = 8.0
    a_max: float = 30.0
    sla_v: float = 30.0

    def gain_db(self, az, el):
        az = _wrap180(np.asarray(az, dtype=float))
        a_h = -np.minimum(12.0 * (az / self.hpbw_az) ** 2, self.a_max)
        a_v = -np.minimum(12.0 * (np.asarray(el, dtype=float) / self.hpbw_el) ** 2, self.sla_v)
        return self.g_max - np.minimum(-(a_h + a_v), self.a_max)


BS_ELEMENT = ElementPattern(hpbw_az=75.0)
UE_ELEMENT = ElementPattern(hpbw_az=90.0, hpbw_el=90.0, g_max=5.0, a_max=25.0, sla_v=25.0)


def _wrap180(a):
    return (a + 180.0) % 360.0 - 180.0


def ula_power(n, spacing, u, u0):
    """Array-factor power of an ``n``-element uniform linear array.

    ``u`` and ``u0`` are direction cosines along the array axis; ``spacing``
    is in wavelengths.  Normalised so the steered peak equals ``n``.
    """
    n = np.asarray(n, dtype=float)
    psi = np.pi * spacing * (np.asarray(u) - np.asarray(u0))
    s = np.sin(psi)
    small = np.abs(s) < 1e-12
    num = np.sin(n * psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = num * num / (n * np.where(small, 1.0, s * s))
    return np.where(small, n, val)


# --------------------------------------------------------------------------- Tx


@dataclass(frozen=True)
class TxBeamGrid:
    az: np.ndarray  # steering azimuth per beam, deg (cell frame)
    el: np.ndarray  # steering elevation per beam, deg
    rows: np.ndarray  # vertical elements per beam
    cols: np.ndarray  # horizontal elements per beam
    spacing_v: float = 0.7
    spacing_h: float = 0.5
    element: ElementPattern = BS_ELEMENT

    @property
    def n_beams(self) -> int:
        return len(self.az)


def default_tx_grid(outer_el: float = -4.0, inner_el: float = -10.0) -> TxBeamGrid:
    """8 narrow outer beams (16x8) and 4 wider inner beams (8x4)."""
    outer_az = -52.5 + 15.0 * np.arange(8)
    inner_az = -45.0 + 30.0 * np.arange(4)
    return TxBeamGrid(
        az=np.concatenate([outer_az, inner_az]),
        el=np.concatenate([np.full(8, outer_el), np.full(4, inner_el)]),
        rows=np.array([16] * 8 + [8] * 4),
        cols=np.array([8] * 8 + [4] * 4),
    )


def tx_gains(grid: TxBeamGrid, az, el) -> np.ndarray:
    """Gain in dBi of every beam towards (az, el); output shape ``az.shape + (n_beams,)``."""
    az = np.asarray(az, dtype=float)[..., None]
    el = np.asarray(el, dtype=float)[..., None]
    az_r, el_r = np.deg2rad(az), np.deg2rad(el)
    baz, bel = np.deg2rad(grid.az), np.deg2rad(grid.el)
    u_h = np.cos(el_r) * np.sin(az_r)
    u_h0 = np.cos(bel) * np.sin(baz)
    u_v = np.sin(el_r)
    u_v0 = np.sin(bel)
    af = ula_power(grid.cols, grid.spacing_h, u_h, u_h0) * ula_power(grid.rows, grid.spacing_v, u_v, u_v0)
    with np.errstate(divide="ignore"):
        af_db = 10.0 * np.log10(af)
    # capping the element term at its steering value keeps every beam peak on its steering direction
    elem = np.minimum(grid.element.gain_db(az, el), grid.element.gain_db(grid.az, grid.el))
    return elem + np.maximum(af_db, -300.0)


def tx_beam_gain(grid: TxBeamGrid, b: int, az, el):
    if not 1 <= b <= grid.n_beams:
        raise ValueError(f"unknown Tx beam index {b}")
    return tx_gains(grid, az, el)[..., b - 1]


def half_power_beamwidth(gain_fn, peak_az: float, el: float, res: float = 0.01) -> float:
    """Azimuth -3 dB width of ``gain_fn(az, el)`` around ``peak_az`` (numerical scan)."""
    az = peak_az + np.arange(-90.0, 90.0 + res, res)
    g = gain_fn(az, np.full_like(az, el))
    i0 = int(np.argmax(g))
    thr = g[i0] - 3.0
    lo = i0
    while lo > 0 and g[lo] >= thr:
        lo -= 1
    hi = i0
    while hi < len(g) - 1 and g[hi] >= thr:
        hi += 1
    return float(az[hi] - az[lo])


# --------------------------------------------------------------------------- rotations


def rot_z(deg):
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(deg):
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_x(deg):
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def ypr_matrix(yaw=0.0, pitch=0.0, roll=0.0):
    """Body-to-parent rotation, intrinsic z-y-x.  Positive pitch tilts +x downwards."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def direction_vector(az, el):
    az_r, el_r = np.broadcast_arrays(np.deg2rad(az), np.deg2rad(el))
    ce = np.cos(el_r)
    return np.stack([ce * np.cos(az_r), ce * np.sin(az_r), np.sin(el_r)], axis=-1)


def vector_angles(v):
    v = np.asarray(v, dtype=float)
    az = np.rad2deg(np.arctan2(v[..., 1], v[..., 0]))
    el = np.rad2deg(np.arcsin(np.clip(v[..., 2], -1.0, 1.0)))
    return az, el


# --------------------------------------------------------------------------- UE panels


@dataclass(frozen=True)
class PanelSet:
    boresight_az: tuple = (-90.0, 0.0, 90.0)  # UE frame, P1..P3
    boresight_el: tuple = (0.0, 0.0, 0.0)
    rx_beam_az: tuple = tuple(-45.0 + 15.0 * r for r in range(7))
    rx_beam_el: float = 0.0
    n_elements: int = 4
    spacing: float = 0.5
    element: ElementPattern = UE_ELEMENT

    @property
    def n_panels(self) -> int:
        return len(self.boresight_az)

    @property
    def n_rx_beams(self) -> int:
        return len(self.rx_beam_az)

    def panel_rotations(self) -> np.ndarray:
        # elevation up is a negative pitch in the z-y-x convention
        return np.stack([ypr_matrix(a, -e, 0.0) for a, e in zip(self.boresight_az, self.boresight_el)])


@dataclass(frozen=True)
class NotchRegion:
    """Raised-cosine angular notch on one panel (depth > 0 attenuates)."""

    panel: int  # 1-based
    depth_db: float
    center_az: float = 0.0
    center_el: float = 0.0
    flat_deg: float = 30.0
    taper_deg: float = 30.0

    def profile(self, az, el):
        c = direction_vector(self.center_az, self.center_el)
        v = direction_vector(az, el)
        alpha = np.rad2deg(np.arccos(np.clip(v @ c, -1.0, 1.0)))
        x = np.clip((alpha - self.flat_deg) / max(self.taper_deg, 1e-9), 0.0, 1.0)
        return 0.5 * (1.0 + np.cos(np.pi * x))


@dataclass(frozen=True)
class GripMask:
    grip: str
    az_grid: np.ndarray  # deg, ascending
    el_grid: np.ndarray  # deg, ascending
    tables: np.ndarray  # (n_panels, n_az, n_el) gain delta in dB
    rotation: tuple = (0.0, 0.0, 0.0)  # yaw, pitch, roll of the UE body w.r.t. the heading frame

    @property
    def rotation_matrix(self) -> np.ndarray:
        return ypr_matrix(*self.rotation)

    def delta_db(self, panel_idx, az, el):
        """Bilinear lookup; ``panel_idx`` is 0-based and broadcasts with the angles."""
        az = np.clip(_wrap180(np.asarray(az, dtype=float)), self.az_grid[0], self.az_grid[-1])
        el = np.clip(np.asarray(el, dtype=float), self.el_grid[0], self.el_grid[-1])
        fa = _frac_index(self.az_grid, az)
        fe = _frac_index(self.el_grid, el)
        ia = np.minimum(np.floor(fa).astype(int), len(self.az_grid) - 2)
        ie = np.minimum(np.floor(fe).astype(int), len(self.el_grid) - 2)
        wa = fa - ia
        we = fe - ie
        t = self.tables
        p = np.broadcast_to(np.asarray(panel_idx), ia.shape)
        return ((1 - wa) * (1 - we) * t[p, ia, ie] + wa * (1 - we) * t[p, ia + 1, ie]
                + (1 - wa) * we * t[p, ia, ie + 1] + wa * we * t[p, ia + 1, ie + 1])


def _frac_index(grid, x):
    step = grid[1] - grid[0]
    return (x - grid[0]) / step


def mask_grid(res_deg: float = 5.0):
    az = np.arange(-180.0, 180.0 + res_deg / 2, res_deg)
    el = np.arange(-90.0, 90.0 + res_deg / 2, res_deg)
    return az, el


def build_mask(grip: str, regions, rotation=(0.0, 0.0, 0.0), n_panels: int = 3,
               res_deg: float = 5.0) -> GripMask:
    az, el = mask_grid(res_deg)
    A, E = np.meshgrid(az, el, indexing="ij")
    tables = np.zeros((n_panels, len(az), len(el)))
    for reg in regions:
        tables[reg.panel - 1] -= reg.depth_db * reg.profile(A, E)
    return GripMask(grip, az, el, tables, tuple(float(x) for x in rotation))


PORTRAIT_FLAT = (0.0, 0.0, 0.0)
LANDSCAPE_VIEWING = (90.0, 0.0, 20.0)  # screen tilted towards the face
LANDSCAPE_GAMING = (90.0, 0.0, 70.0)   # held close to upright


def grip_regions(levels: dict | None = None) -> dict:
    """Notch layout per grip.  Depths come from ``levels`` (named dB levels)."""
    lv = dict(BLOCKAGE_LEVELS)
    if levels:
        lv.update(levels)
    return {
        "FREE": ([], PORTRAIT_FLAT),
        "RHB": ([
            NotchRegion(1, lv["strong"], flat_deg=30.0, taper_deg=30.0),    # thumb over P1
            NotchRegion(3, lv["moderate"], flat_deg=20.0, taper_deg=30.0),  # fingers near P3
        ], PORTRAIT_FLAT),
        "DHS": ([
            NotchRegion(1, lv["partial"], center_az=-40.0, flat_deg=15.0, taper_deg=30.0),
            NotchRegion(2, lv["light"], flat_deg=20.0, taper_deg=30.0),
            NotchRegion(3, lv["partial"], center_az=40.0, flat_deg=15.0, taper_deg=30.0),
        ], LANDSCAPE_VIEWING),
        "DHG": ([
            NotchRegion(2, lv["deep"], flat_deg=180.0, taper_deg=0.0),      # P2 fully covered
        ], LANDSCAPE_GAMING),
    }


def bundled_grip_masks(levels: dict | None = None, res_deg: float = 5.0) -> dict[str, GripMask]:
    return {g: build_mask(g, regs, rot, res_deg=res_deg) for g, (regs, rot) in grip_regions(levels).items()}


def free_mask(n_panels: int = 3, res_deg: float = 5.0) -> GripMask:
    return build_mask("FREE", [], n_panels=n_panels, res_deg=res_deg)


def panel_local_angles(panel_set: PanelSet, v_body):
    """Angles of body-frame directions ``v_body (...,3)`` in every panel frame -> (..., D)."""
    rots = panel_set.panel_rotations()  # (D,3,3) panel->body
    v_local = np.einsum("dji,...j->...di", rots, v_body)
    return vector_angles(v_local)


def rx_gains_local(panel_set: PanelSet, mask: GripMask | None, az_l, el_l) -> np.ndarray:
    """Rx gain (dB) for all Rx beams given per-panel local angles ``(..., D)`` -> ``(..., D, R)``."""
    el_r = np.deg2rad(el_l)
    u = np.cos(el_r) * np.sin(np.deg2rad(az_l))
    bu = np.cos(np.deg2rad(panel_set.rx_beam_el)) * np.sin(np.deg2rad(np.asarray(panel_set.rx_beam_az)))
    af = ula_power(panel_set.n_elements, panel_set.spacing, u[..., None], bu)
    with np.errstate(divide="ignore"):
        g = 10.0 * np.log10(af)
    g = np.maximum(g, -300.0) + panel_set.element.gain_db(az_l, el_l)[..., None]
    if mask is not None:
        pidx = np.arange(panel_set.n_panels)
        g = g + mask.delta_db(pidx, az_l, el_l)[..., None]
    return g


def rx_gains(panel_set: PanelSet, mask: GripMask | None, v_global, ue_rotation) -> np.ndarray:
    """Rx gain for global arrival directions ``(..., 3)``.

    ``ue_rotation`` maps UE body coordinates to global coordinates; a single
    (3,3) matrix or one per leading index.
    """
    v_body = np.einsum("...ji,...j->...i", ue_rotation, v_global)
    az_l, el_l = panel_local_angles(panel_set, v_body)
    return rx_gains_local(panel_set, mask, az_l, el_l)


def rx_gain(panel_set: PanelSet, mask: GripMask | None, d: int, r: int, az, el, ue_yaw: float = 0.0):
    """Gain of panel ``d``, Rx beam ``r`` (1-based) for a global arrival direction.

    The UE body orientation is the heading yaw followed by the grip rotation of
    ``mask``.
    """
    if not 1 <= d <= panel_set.n_panels:
        raise ValueError(f"unknown panel {d}")
    if not 1 <= r <= panel_set.n_rx_beams:
        raise ValueError(f"unknown Rx beam {r}")
    rot = rot_z(ue_yaw)
    if mask is not None:
        rot = rot @ mask.rotation_matrix
    g = rx_gains(panel_set, mask, direction_vector(az, el), rot)
    return g[..., d - 1, r - 1]


# --------------------------------------------------------------------------- CSV I/O

MASK_HEADER = ["panel", "az_deg", "el_deg", "delta_db"]


def write_mask_csv(mask: GripMask, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MASK_HEADER)
        for p in range(mask.tables.shape[0]):
            for i, az in enumerate(mask.az_grid):
                for j, el in enumerate(mask.el_grid):
                    w.writerow([p + 1, f"{az:g}", f"{el:g}", f"{mask.tables[p, i, j]:.6f}"])


def read_mask_csv(path, grip: str = "CUSTOM", rotation=(0.0, 0.0, 0.0)) -> GripMask:
    """Load a mask table; the grid must be regular and complete for every panel."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MASK_HEADER:
            raise ValueError(f"bad mask header {header!r}, expected {MASK_HEADER}")
        rows = [(int(p), float(a), float(e), float(v)) for p, a, e, v in reader]
    if not rows:
        raise ValueError("empty mask file")
    panels = sorted({r[0] for r in rows})
    az = np.array(sorted({r[1] for r in rows}))
    el = np.array(sorted({r[2] for r in rows}))
    if panels != list(range(1, len(panels) + 1)):
        raise ValueError(f"panels must be numbered 1..n, got {panels}")
    for g, name in ((az, "az"), (el, "el")):
        if len(g) < 2 or not np.allclose(np.diff(g), g[1] - g[0]):
            raise ValueError(f"{name} grid is not regular")
    tables = np.full((len(panels), len(az), len(el)), np.nan)
    ai = {v: i for i, v in enumerate(az)}
    ei = {v: i for i, v in enumerate(el)}
    for p, a, e, v in rows:
        if not np.isnan(tables[p - 1, ai[a], ei[e]]):
            raise ValueError(f"duplicate entry panel={p} az={a} el={e}")
        tables[p - 1, ai[a], ei[e]] = v
    if np.isnan(tables).any():
        raise ValueError(f"incomplete grid: {int(np.isnan(tables).sum())} missing entries")
    if not np.isfinite(tables).all():
        raise ValueError("non-finite attenuation entries")
    return GripMask(grip, az, el, tables, tuple(rotation))


def write_pattern_csv(path, az, el, gain_db, label: str) -> None:
    """Pattern cut/map as CSV ``pattern,az_deg,el_deg,gain_db``."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pattern", "az_deg", "el_deg", "gain_db"])
        for a, e, g in zip(np.ravel(az), np.ravel(el), np.ravel(gain_db)):
            w.writerow([label, f"{a:g}", f"{e:g}", f"{g:.6f}"])
