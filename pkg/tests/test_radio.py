import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpuesim import radio

GRID = radio.default_tx_grid()
PS = radio.PanelSet()
MASKS = radio.bundled_grip_masks()


def test_tx_grid_shape_and_ordering():
    assert GRID.n_beams == 12
    peaks = [radio.tx_beam_gain(GRID, b, GRID.az[b - 1], GRID.el[b - 1]) for b in range(1, 13)]
    widths = [radio.half_power_beamwidth(lambda a, e, b=b: radio.tx_beam_gain(GRID, b, a, e),
                                         GRID.az[b - 1], GRID.el[b - 1]) for b in range(1, 13)]
    assert min(peaks[:8]) > max(peaks[8:])
    assert max(widths[:8]) < min(widths[8:])


@pytest.mark.parametrize("b", range(1, 13))
def test_tx_peak_at_steering_direction(b):
    az, el = np.meshgrid(np.arange(-180.0, 180.0, 1.0), np.arange(-90.0, 91.0, 1.0))
    g = radio.tx_beam_gain(GRID, b, az, el)
    peak = radio.tx_beam_gain(GRID, b, GRID.az[b - 1], GRID.el[b - 1])
    assert peak >= g.max() - 1e-9


def test_array_factor_peak_16x8():
    # direct phasor sum of a 16x8 broadside array vs a single element
    n, m = 16, 8
    s = np.abs(np.sum(np.ones((n, m)))) ** 2 / (n * m)
    got = 10 * np.log10(radio.ula_power(16, 0.7, 0.0, 0.0) * radio.ula_power(8, 0.5, 0.0, 0.0))
    assert got == pytest.approx(10 * np.log10(s), abs=1e-9)
    assert got == pytest.approx(21.07, abs=0.01)


def test_ula_power_matches_phasor_sum():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        u, u0 = rng.uniform(-1, 1, 2)
        k = np.arange(n)
        ref = abs(np.sum(np.exp(1j * np.pi * k * (u - u0)))) ** 2 / n
        assert radio.ula_power(n, 0.5, u, u0) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_bad_indices():
    with pytest.raises(ValueError):
        radio.tx_beam_gain(GRID, 13, 0.0, 0.0)
    with pytest.raises(ValueError):
        radio.rx_gain(PS, None, 4, 1, 0.0, 0.0)
    with pytest.raises(ValueError):
        radio.rx_gain(PS, None, 1, 8, 0.0, 0.0)


def test_panel_set_invariants():
    assert PS.n_panels == 3 and PS.n_rx_beams == 7
    assert PS.n_elements == 4 and PS.spacing == 0.5


def test_rx_boresight_array_gain():
    # panel 2 faces the UE x axis; beam 4 is its broadside beam
    g = radio.rx_gain(PS, None, 2, 4, 0.0, 0.0)
    assert g - PS.element.gain_db(0.0, 0.0) == pytest.approx(10 * np.log10(4), abs=1e-9)


def test_free_mask_is_zero_and_identity():
    free = MASKS["FREE"]
    assert np.all(free.tables == 0.0)
    az = np.linspace(-180, 180, 37)
    for d in (1, 2, 3):
        for r in (1, 4, 7):
            np.testing.assert_array_equal(radio.rx_gain(PS, free, d, r, az, 10.0),
                                          radio.rx_gain(PS, None, d, r, az, 10.0))


def test_dhg_panel2_deep_and_others_clear():
    m = MASKS["DHG"]
    deep = radio.BLOCKAGE_LEVELS["deep"]
    assert m.tables[1].max() <= -deep
    assert np.all(m.tables[0] == 0) and np.all(m.tables[2] == 0)


def test_dhg_rx_gain_reduced_by_deep_level():
    m = MASKS["DHG"]
    az = np.linspace(-180, 180, 73)
    rot = m.rotation_matrix
    v = radio.direction_vector(az, np.zeros_like(az))
    g = radio.rx_gains(PS, m, v, rot)[..., 1, :]
    g0 = radio.rx_gains(PS, None, v, rot)[..., 1, :]
    assert np.all(g <= g0 - 30.0 + 1e-9)


def test_rhb_attenuation_ordering():
    t = -MASKS["RHB"].tables
    assert t[0].mean() > t[2].mean() > t[1].mean() == 0.0


def test_dhs_levels():
    t = -MASKS["DHS"].tables
    lv = radio.BLOCKAGE_LEVELS
    assert t[0].max() == pytest.approx(lv["partial"]) and t[2].max() == pytest.approx(lv["partial"])
    assert t[1].max() == pytest.approx(lv["light"])


def test_masks_only_attenuate():
    for m in MASKS.values():
        assert m.tables.max() <= 0.0
        assert np.isfinite(m.tables).all()


def test_mask_lookup_clamps_outside_grid():
    m = MASKS["RHB"]
    assert m.delta_db(0, 0.0, 95.0) == pytest.approx(m.delta_db(0, 0.0, 90.0))
    assert m.delta_db(0, 0.0, -120.0) == pytest.approx(m.delta_db(0, 0.0, -90.0))


angle = st.floats(-180, 180, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(angle, st.floats(-80, 80), angle, angle, st.floats(-60, 60), st.sampled_from(radio.GRIPS))
def test_frame_reciprocity(az, el, yaw, rz, ry, grip):
    """Rotating the arrival direction and the UE orientation together changes nothing."""
    m = MASKS[grip]
    v = radio.direction_vector(az, el)
    body = radio.rot_z(yaw) @ m.rotation_matrix
    extra = radio.ypr_matrix(rz, ry, 0.0)
    g1 = radio.rx_gains(PS, m, v, body)
    g2 = radio.rx_gains(PS, m, extra @ v, extra @ body)
    # exact nulls are ill-conditioned, compare above a floor
    np.testing.assert_allclose(np.maximum(g1, -100), np.maximum(g2, -100), atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(angle, st.floats(-89, 89), st.sampled_from(radio.GRIPS))
def test_masked_gain_never_exceeds_free(az, el, grip):
    m = MASKS[grip]
    v = radio.direction_vector(az, el)
    rot = m.rotation_matrix
    assert np.all(radio.rx_gains(PS, m, v, rot) <= radio.rx_gains(PS, None, v, rot) + 1e-12)


def test_link_gain_additive_in_db():
    rng = np.random.default_rng(5)
    for _ in range(20):
        az, el = rng.uniform(-60, 60), rng.uniform(-30, 0)
        gt = radio.tx_beam_gain(GRID, 3, az, el)
        gr = radio.rx_gain(PS, MASKS["RHB"], 1, 2, az, el)
        lin = 10 ** (gt / 10) * 10 ** (gr / 10)
        assert 10 * np.log10(lin) == pytest.approx(gt + gr, abs=1e-9)


def test_mask_csv_roundtrip(tmp_path):
    m = MASKS["DHS"]
    radio.write_mask_csv(m, tmp_path / "m.csv")
    back = radio.read_mask_csv(tmp_path / "m.csv", "DHS", m.rotation)
    np.testing.assert_allclose(back.tables, m.tables, atol=1e-6)
    np.testing.assert_array_equal(back.az_grid, m.az_grid)


def test_mask_csv_rejects_incomplete(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("panel,az_deg,el_deg,delta_db\n1,0,0,0\n1,5,0,0\n1,0,5,0\n")
    with pytest.raises(ValueError, match="incomplete"):
        radio.read_mask_csv(p)
    p.write_text("panel,az,el,delta\n")
    with pytest.raises(ValueError, match="header"):
        radio.read_mask_csv(p)
