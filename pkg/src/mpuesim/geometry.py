"""Hexagonal 7-site deployment with wrap-around, UE drop and straight-line motion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

SECTOR_AZIMUTHS_DEG = (30.0, 150.0, 270.0)


@dataclass(frozen=True)
class NetworkLayout:
    isd: float
    sites: np.ndarray  # (7, 2) m
    cell_site: np.ndarray  # (21,) site index per cell
    cell_azimuth: np.ndarray  # (21,) sector boresight, deg
    replica_offsets: np.ndarray  # (7, 2) m, row 0 is the original layout

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_cells(self) -> int:
        return len(self.cell_site)

    @property
    def cells(self) -> list[tuple[int, float]]:
        return [(int(s), float(a)) for s, a in zip(self.cell_site, self.cell_azimuth)]

    @property
    def cell_positions(self) -> np.ndarray:
        return self.sites[self.cell_site]

    @property
    def lattice_basis(self) -> np.ndarray:
        """Two replica offsets 60 deg apart spanning the wrap-around lattice (rows)."""
        return self.replica_offsets[1:3]

    @property
    def region_area(self) -> float:
        b = self.lattice_basis
        return float(abs(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]))


def build_hex_layout(isd: float) -> NetworkLayout:
    if not np.isfinite(isd) or isd <= 0:
        raise ConfigError([f"isd must be positive, got {isd!r}"])
    ring = np.deg2rad(30.0 + 60.0 * np.arange(6))
    sites = np.vstack([[0.0, 0.0], isd * np.column_stack([np.cos(ring), np.sin(ring)])])

    # 7-cell cluster: offset = 2*a1 + a2 on the site lattice, then its six rotations
    a1 = isd * np.array([np.cos(np.pi / 6), np.sin(np.pi / 6)])
    a2 = isd * np.array([np.cos(np.pi / 2), np.sin(np.pi / 2)])
    base = 2.0 * a1 + a2
    rot = np.deg2rad(60.0 * np.arange(6))
    c, s = np.cos(rot), np.sin(rot)
    mirrors = np.column_stack([c * base[0] - s * base[1], s * base[0] + c * base[1]])
    offsets = np.vstack([[0.0, 0.0], mirrors])

    cell_site = np.repeat(np.arange(7), 3)
    cell_az = np.tile(np.array(SECTOR_AZIMUTHS_DEG), 7)
    return NetworkLayout(float(isd), sites, cell_site, cell_az, offsets)


def wrap_displacement(a, b, layout: NetworkLayout) -> np.ndarray:
    """Shortest vector from ``a`` to any wrap-around image of ``b``.

    Broadcasts over leading dimensions of ``a`` and ``b`` (last axis is x/y).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cand = b[..., None, :] + layout.replica_offsets - a[..., None, :]
    k = np.argmin(np.einsum("...ij,...ij->...i", cand, cand), axis=-1)
    return np.take_along_axis(cand, k[..., None, None], axis=-2)[..., 0, :]


def wrap_position(p, layout: NetworkLayout) -> np.ndarray:
    """Map positions into the fundamental region (Voronoi cell of the replica lattice)."""
    p = np.asarray(p, dtype=float)
    basis = layout.lattice_basis
    coords = p @ np.linalg.inv(basis)
    base = np.floor(coords)
    corners = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float)
    lattice_pts = (base[..., None, :] + corners) @ basis
    diff = p[..., None, :] - lattice_pts
    k = np.argmin(np.einsum("...ij,...ij->...i", diff, diff), axis=-1)
    return np.take_along_axis(diff, k[..., None, None], axis=-2)[..., 0, :]


@dataclass(frozen=True)
class UEKinematics:
    position: tuple[float, float]
    heading: float  # rad
    speed: float  # m/s
    height: float = 1.5


def drop_ues(
    n: int,
    layout: NetworkLayout,
    rng: np.random.Generator,
    speed: float = 60 / 3.6,
    height: float = 1.5,
) -> list[UEKinematics]:
    """Uniform i.i.d. drop over the wrapped region with uniform random headings."""
    if n < 1:
        raise ValueError("n must be >= 1")
    uv = rng.random((n, 2))
    pos = wrap_position(uv @ layout.lattice_basis, layout)
    heading = rng.uniform(0.0, 2 * np.pi, n)
    return [
        UEKinematics((float(x), float(y)), float(h), float(speed), float(height))
        for (x, y), h in zip(pos, heading)
    ]


def step_ue(ue: UEKinematics, dt: float, layout: NetworkLayout) -> UEKinematics:
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return ue
    p = np.asarray(ue.position) + ue.speed * dt * np.array([np.cos(ue.heading), np.sin(ue.heading)])
    x, y = wrap_position(p, layout)
    return replace(ue, position=(float(x), float(y)))


def advance_positions(pos: np.ndarray, heading: np.ndarray, speed: np.ndarray, dt: float,
                      layout: NetworkLayout) -> np.ndarray:
    """Array form of :func:`step_ue` for a whole UE population."""
    step = (speed * dt)[:, None] * np.column_stack([np.cos(heading), np.sin(heading)])
    return wrap_position(pos + step, layout)


def write_layout_csv(layout: NetworkLayout, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", "site_id", "x_m", "y_m", "azimuth_deg"])
        for cid, (sid, az) in enumerate(layout.cells):
            x, y = layout.sites[sid]
            w.writerow([cid, sid, f"{x:.6f}", f"{y:.6f}", f"{az:g}"])
