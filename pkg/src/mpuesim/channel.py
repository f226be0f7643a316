"""Large- and small-scale propagation: UMi path loss with soft LoS, shadowing, Jakes fading.

Path-loss coefficients (3GPP TR 38.901 UMi street canyon, fc in GHz, d in m):

    PL_LoS  = 32.4 + 21 log10(d3d) + 20 log10(fc)                 d2d <= d_bp
            = 32.4 + 40 log10(d3d) + 20 log10(fc)
              - 9.5 log10(d_bp^2 + (h_bs - h_ut)^2)                d2d >  d_bp
    PL_NLoS = max(PL_LoS, 35.3 log10(d3d) + 22.4 + 21.3 log10(fc) - 0.3 (h_ut - 1.5))
    d_bp    = 4 (h_bs - 1)(h_ut - 1) fc / c
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1

from .geometry import NetworkLayout, wrap_position

C_LIGHT = 299_792_458.0


# --------------------------------------------------------------------------- path loss


def breakpoint_distance(fc_ghz: float, h_bs: float, h_ut: float) -> float:
    return 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc_ghz * 1e9 / C_LIGHT


def _d2d_from_d3d(d3d, h_bs, h_ut):
    return np.sqrt(np.maximum(np.square(d3d) - (h_bs - h_ut) ** 2, 0.0))


def path_loss_los(d3d, fc_ghz: float = 28.0, h_bs: float = 10.0, h_ut: float = 1.5):
    d3d = np.asarray(d3d, dtype=float)
    d_bp = breakpoint_distance(fc_ghz, h_bs, h_ut)
    d2d = _d2d_from_d3d(d3d, h_bs, h_ut)
    near = 32.4 + 21.0 * np.log10(d3d) + 20.0 * np.log10(fc_ghz)
    far = (32.4 + 40.0 * np.log10(d3d) + 20.0 * np.log10(fc_ghz)
           - 9.5 * np.log10(d_bp ** 2 + (h_bs - h_ut) ** 2))
    return np.where(d2d <= d_bp, near, far)


def path_loss_nlos(d3d, fc_ghz: float = 28.0, h_bs: float = 10.0, h_ut: float = 1.5):
    d3d = np.asarray(d3d, dtype=float)
    pl = 35.3 * np.log10(d3d) + 22.4 + 21.3 * np.log10(fc_ghz) - 0.3 * (h_ut - 1.5)
    return np.maximum(path_loss_los(d3d, fc_ghz, h_bs, h_ut), pl)


def path_loss(d3d, fc_ghz: float = 28.0, w_los=1.0, h_bs: float = 10.0, h_ut: float = 1.5):
    """Soft-LoS path loss: ``w * PL_LoS + (1 - w) * PL_NLoS`` in dB."""
    d3d = np.asarray(d3d, dtype=float)
    if np.any(d3d <= 0):
        raise ValueError("d3d must be > 0")
    w = np.asarray(w_los, dtype=float)
    if np.any((w < 0) | (w > 1)):
        raise ValueError("w_los must lie in [0, 1]")
    return w * path_loss_los(d3d, fc_ghz, h_bs, h_ut) + (1 - w) * path_loss_nlos(d3d, fc_ghz, h_bs, h_ut)


# --------------------------------------------------------------------------- soft LoS


@dataclass(frozen=True)
class SoftLosParams:
    d1: float = 18.0  # LoS-certain radius, m
    d2: float = 36.0  # decay length, m
    window: float = 20.0  # trailing smoothing window, m


def los_probability(d2d, d1: float = 18.0, d2: float = 36.0):
    """3GPP UMi LoS probability."""
    d = np.maximum(np.asarray(d2d, dtype=float), 1e-12)
    p = d1 / d + np.exp(-d / d2) * (1.0 - d1 / d)
    return np.where(d <= d1, 1.0, p)


def _los_prob_integral(x, d1, d2):
    """Antiderivative of the LoS probability from 0 (probability 1 for x <= d1)."""
    x = np.asarray(x, dtype=float)
    xs = np.maximum(x, d1)

    def g(v):
        return d1 * np.log(v) - d2 * np.exp(-v / d2) + d1 * exp1(v / d2)

    return np.where(x <= d1, x, d1 + g(xs) - g(d1))


def soft_los_weight(d2d, params: SoftLosParams = SoftLosParams()):
    """LoS probability averaged over the trailing window ``[d - W, d]``.

    The trailing window keeps the weight at exactly 1 inside the LoS-certain
    radius and preserves monotonicity.
    """
    d = np.asarray(d2d, dtype=float)
    if np.any(d < 0):
        raise ValueError("d2d must be >= 0")
    if params.window <= 0:
        return los_probability(d, params.d1, params.d2)
    hi = _los_prob_integral(d, params.d1, params.d2)
    lo = _los_prob_integral(d - params.window, params.d1, params.d2)
    return np.clip((hi - lo) / params.window, 0.0, 1.0)


# --------------------------------------------------------------------------- shadowing


class ShadowField:
    """Stack of independent, wrap-around periodic Gaussian fields with exponential correlation.

    Fields are synthesised by circulant embedding on a grid aligned with the
    replica lattice (so every field is exactly periodic under the wrap-around
    offsets) and read back with bilinear interpolation rescaled to unit
    variance, which keeps the marginal standard deviation at ``sigma_db``.
    """

    def __init__(self, layout: NetworkLayout, sigma_db: float, decorr_m: float,
                 rng: np.random.Generator, n_fields: int = 1, grid_step: float = 2.5):
        self.layout = layout
        self.sigma_db = float(sigma_db)
        self.decorr_m = float(decorr_m)
        basis = layout.lattice_basis
        n = int(math.ceil(np.linalg.norm(basis[0]) / grid_step))
        self.n = n
        self._inv_basis = np.linalg.inv(basis)

        m = np.arange(n)
        vec = (m[:, None, None] * basis[0] + m[None, :, None] * basis[1]) / n
        dist = np.linalg.norm(wrap_position(vec, layout), axis=-1)
        cov = np.exp(-dist / self.decorr_m)
        lam = np.maximum(np.fft.fft2(cov).real, 0.0)
        cov_real = np.fft.ifft2(lam).real
        scale = np.sqrt(lam / (n * n))
        var0 = cov_real[0, 0]

        fields = np.empty((n_fields, n, n))
        for k in range(0, n_fields, 2):
            z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            y = np.fft.fft2(scale * z)
            fields[k] = y.real
            if k + 1 < n_fields:
                fields[k + 1] = y.imag
        self.fields = fields / np.sqrt(var0)
        c = cov_real / var0
        # corner covariance for bilinear weights on (0,0),(1,0),(0,1),(1,1)
        c10, c01, c11, c1m = c[1, 0], c[0, 1], c[1, 1], c[1, n - 1]
        self._corner_cov = np.array([
            [1.0, c10, c01, c11],
            [c10, 1.0, c1m, c01],
            [c01, c1m, 1.0, c10],
            [c11, c01, c10, 1.0],
        ])

    @property
    def n_fields(self) -> int:
        return self.fields.shape[0]

    def __call__(self, positions) -> np.ndarray:
        """Shadowing in dB at ``positions (..., 2)`` -> ``(..., n_fields)``."""
        p = np.asarray(positions, dtype=float)
        uv = (p @ self._inv_basis) * self.n
        base = np.floor(uv)
        fr = uv - base
        i0 = base[..., 0].astype(np.int64) % self.n
        j0 = base[..., 1].astype(np.int64) % self.n
        i1 = (i0 + 1) % self.n
        j1 = (j0 + 1) % self.n
        a, b = fr[..., 0], fr[..., 1]
        w = np.stack([(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b], axis=-1)
        var = np.einsum("...i,ij,...j->...", w, self._corner_cov, w)
        f = self.fields
        val = (w[..., 0, None] * np.moveaxis(f[:, i0, j0], 0, -1)
               + w[..., 1, None] * np.moveaxis(f[:, i1, j0], 0, -1)
               + w[..., 2, None] * np.moveaxis(f[:, i0, j1], 0, -1)
               + w[..., 3, None] * np.moveaxis(f[:, i1, j1], 0, -1))
        return self.sigma_db * val / np.sqrt(var)[..., None]


def shadow_db(field: ShadowField, position) -> np.ndarray:
    return field(position)


# --------------------------------------------------------------------------- fast fading


def doppler_hz(speed_mps: float, fc_ghz: float) -> float:
    return speed_mps * fc_ghz * 1e9 / C_LIGHT


class FadingProcess:
    """Sum-of-sinusoids Rayleigh fading for a bundle of i.i.d. links.

    Each link carries ``n_sinusoids`` oscillators (half on the in-phase, half
    on the quadrature branch) with quarter-circle arrival angles; the
    oscillator frequencies are shared by the bundle while amplitudes and
    phases are drawn independently per link, so links are mutually
    uncorrelated.  Mean power is 1 for every realisation.  Passing ``theta``
    fixes the angle rotation, which lets several bundles share one set of
    oscillators.
    """

    def __init__(self, n_links: int, doppler: float, rng: np.random.Generator,
                 n_sinusoids: int = 32, dtype=np.float64, theta: float | None = None):
        if n_sinusoids % 2:
            raise ValueError("n_sinusoids must be even")
        m = n_sinusoids // 2
        self.doppler = float(doppler)
        if theta is None:
            theta = rng.uniform(-np.pi, np.pi)
        alpha = (2 * np.pi * np.arange(1, m + 1) - np.pi + theta) / (4 * m)
        wd = 2 * np.pi * self.doppler
        self.w_c = wd * np.cos(alpha)
        self.w_s = wd * np.sin(alpha)
        psi = rng.uniform(-np.pi, np.pi, (n_links, m))
        phi_c = rng.uniform(-np.pi, np.pi, (n_links, m))
        phi_s = rng.uniform(-np.pi, np.pi, (n_links, m))
        amp = np.sqrt(2.0 / m)
        ac, as_ = amp * np.cos(psi), amp * np.sin(psi)
        self.coef_c = np.concatenate([ac * np.cos(phi_c), -ac * np.sin(phi_c)], axis=1).astype(dtype)
        self.coef_s = np.concatenate([as_ * np.cos(phi_s), -as_ * np.sin(phi_s)], axis=1).astype(dtype)

    @property
    def n_links(self) -> int:
        return self.coef_c.shape[0]

    def basis(self, t):
        """Oscillator values at times ``t`` -> (in-phase (..., 2M), quadrature (..., 2M))."""
        t = np.asarray(t, dtype=float)[..., None]
        xc, xs = self.w_c * t, self.w_s * t
        return (np.concatenate([np.cos(xc), np.sin(xc)], axis=-1),
                np.concatenate([np.cos(xs), np.sin(xs)], axis=-1))

    def gains(self, t) -> np.ndarray:
        """Complex link gains at ``t`` -> ``t.shape + (n_links,)``."""
        bc, bs = self.basis(t)
        return bc @ self.coef_c.T.astype(float) + 1j * (bs @ self.coef_s.T.astype(float))


def fading_db(proc: FadingProcess, t) -> np.ndarray:
    g = proc.gains(t)
    return 10.0 * np.log10(np.maximum(np.abs(g) ** 2, 1e-30))
