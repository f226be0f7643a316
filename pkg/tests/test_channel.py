import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import j0

from mpuesim import channel
from mpuesim.geometry import build_hex_layout, wrap_position

LAYOUT = build_hex_layout(200.0)


def test_los_weight_identity():
    d = np.array([20.0, 80.0, 150.0])
    np.testing.assert_array_equal(channel.path_loss(d, 28.0, 1.0), channel.path_loss_los(d, 28.0))
    np.testing.assert_array_equal(channel.path_loss(d, 28.0, 0.0), channel.path_loss_nlos(d, 28.0))


def test_half_weight_is_mean_at_100m():
    d3d = np.hypot(100.0, 8.5)
    # direct evaluation of the urban-micro formulas
    d_bp = 4 * 9.0 * 0.5 * 28e9 / 299_792_458.0
    los = 32.4 + 21 * np.log10(d3d) + 20 * np.log10(28.0)
    assert 100.0 <= d_bp
    nlos = max(los, 35.3 * np.log10(d3d) + 22.4 + 21.3 * np.log10(28.0))
    assert channel.path_loss(d3d, 28.0, 0.5) == pytest.approx((los + nlos) / 2, abs=1e-9)


def test_far_los_branch_formula():
    d_bp = channel.breakpoint_distance(28.0, 10.0, 1.5)
    d2d = d_bp + 100.0
    d3d = np.hypot(d2d, 8.5)
    ref = 32.4 + 40 * np.log10(d3d) + 20 * np.log10(28.0) - 9.5 * np.log10(d_bp ** 2 + 8.5 ** 2)
    assert channel.path_loss_los(d3d) == pytest.approx(ref, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(9, 2000), st.floats(0.0, 500.0), st.floats(0, 1))
def test_path_loss_monotone(d, extra, w):
    assert channel.path_loss(d + extra, 28.0, w) >= channel.path_loss(d, 28.0, w) - 1e-9


def test_path_loss_domain():
    with pytest.raises(ValueError):
        channel.path_loss(0.0)
    with pytest.raises(ValueError):
        channel.path_loss(10.0, 28.0, 1.5)


def test_soft_los_weight_points():
    assert channel.soft_los_weight(0.0) == 1.0
    assert channel.soft_los_weight(18.0) == pytest.approx(1.0, abs=1e-6)
    assert channel.soft_los_weight(300.0) <= channel.soft_los_weight(30.0)


def test_soft_los_weight_is_window_average():
    """Trailing-window mean of the LoS probability, by numerical quadrature."""
    p = channel.SoftLosParams()
    for d in (25.0, 40.0, 90.0, 250.0):
        x = np.linspace(d - p.window, d, 20001)
        ref = np.trapezoid(channel.los_probability(np.maximum(x, 0.0), p.d1, p.d2), x) / p.window
        assert channel.soft_los_weight(d, p) == pytest.approx(ref, abs=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1000), st.floats(0, 200))
def test_soft_los_weight_monotone_bounded(d, extra):
    w1, w2 = channel.soft_los_weight(d), channel.soft_los_weight(d + extra)
    assert 0.0 <= w2 <= w1 + 1e-12 <= 1.0 + 1e-12


@pytest.fixture(scope="module")
def shadow():
    return channel.ShadowField(LAYOUT, 7.82, 13.0, np.random.default_rng(11), n_fields=40)


def test_shadow_sigma(shadow):
    rng = np.random.default_rng(0)
    p = wrap_position(rng.uniform(-400, 400, (10_000, 2)), LAYOUT)
    v = shadow(p)
    assert v.std() == pytest.approx(7.82, rel=0.05)
    assert abs(v.mean()) < 0.5


def test_shadow_decorrelation(shadow):
    rng = np.random.default_rng(1)
    p = wrap_position(rng.uniform(-400, 400, (10_000, 2)), LAYOUT)
    ang = rng.uniform(0, 2 * np.pi, 10_000)
    q = p + 13.0 * np.column_stack([np.cos(ang), np.sin(ang)])
    a, b = shadow(p).ravel(), shadow(q).ravel()
    assert np.corrcoef(a, b)[0, 1] == pytest.approx(np.exp(-1), abs=0.1)


def test_shadow_deterministic_and_periodic(shadow):
    p = np.array([[12.3, -45.6], [100.0, 20.0]])
    np.testing.assert_array_equal(shadow(p), shadow(p))
    for o in LAYOUT.replica_offsets:
        np.testing.assert_allclose(shadow(p + o), shadow(p), atol=1e-9)


def test_doppler():
    assert channel.doppler_hz(60 / 3.6, 28.0) == pytest.approx(1556.6, abs=0.1)


def test_zero_speed_constant():
    proc = channel.FadingProcess(8, 0.0, np.random.default_rng(0))
    g = proc.gains(np.array([0.0, 0.3, 7.0]))
    np.testing.assert_allclose(g, g[[0, 0, 0]])


def test_power_normalisation_per_link():
    fd = channel.doppler_hz(60 / 3.6, 28.0)
    proc = channel.FadingProcess(16, fd, np.random.default_rng(2))
    t = np.arange(0.0, 10.0, 1e-4)
    p = np.abs(proc.gains(t)) ** 2
    np.testing.assert_allclose(p.mean(axis=0), 1.0, rtol=0.02)


def test_autocorrelation_matches_bessel():
    fd = channel.doppler_hz(60 / 3.6, 28.0)
    proc = channel.FadingProcess(3000, fd, np.random.default_rng(3))
    lags = np.linspace(0.0, 0.5e-3, 11)
    t0 = np.random.default_rng(4).uniform(0, 5, 64)
    acc = np.zeros(len(lags))
    for t in t0:
        g = proc.gains(t + lags)
        acc += np.real(np.mean(g[0] * np.conj(g), axis=-1))
    acc /= len(t0)
    np.testing.assert_allclose(acc, j0(2 * np.pi * fd * lags), atol=0.1)


def test_links_uncorrelated():
    proc = channel.FadingProcess(400, 1500.0, np.random.default_rng(5))
    g = proc.gains(np.arange(0.0, 2.0, 1e-3))
    # links share oscillator frequencies, so only the ensemble over link pairs decorrelates
    c = np.mean(g[:, :200] * np.conj(g[:, 200:]), axis=0)
    assert abs(c.mean()) < 0.05


def test_replay_bit_exact():
    a = channel.FadingProcess(4, 1000.0, np.random.default_rng(9))
    b = channel.FadingProcess(4, 1000.0, np.random.default_rng(9))
    t = np.linspace(0, 1, 50)
    np.testing.assert_array_equal(channel.fading_db(a, t), channel.fading_db(b, t))
