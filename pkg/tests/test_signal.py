import math

import numpy as np
import pytest

from madoa import (
    ConfigurationError,
    InvalidDirectionError,
    SourceSet,
    build_pma_layout,
    direction_cosines,
    inverse_direction_cosines,
    noise_variance_for_snr,
    steering_matrix,
    steering_vector,
    synthesize_snapshots,
)

# sin(45deg)*cos(60deg) and cos(45deg), to 16 digits
COS45_PAIR = (0.3535533905932738, 0.7071067811865476)


# ---------------------------------------------------------------------------
# direction cosines
# ---------------------------------------------------------------------------

def test_direction_cosines_broadside_is_zero():
    tc, pc = direction_cosines(90.0, 90.0)
    assert abs(tc) < 1e-15 and abs(pc) < 1e-15


def test_direction_cosines_forty_five_sixty():
    tc, pc = direction_cosines(45.0, 60.0)
    assert tc == pytest.approx(COS45_PAIR[0], abs=1e-12)
    assert pc == pytest.approx(COS45_PAIR[1], abs=1e-12)


def test_direction_cosines_third_source_of_resolution_study():
    tc, pc = direction_cosines(135.0, 115.0)
    assert tc == pytest.approx(-0.2988362387301198, abs=1e-12)
    assert pc == pytest.approx(-0.7071067811865476, abs=1e-12)


def test_inverse_direction_cosines_trivial_points():
    assert inverse_direction_cosines(0.0, 0.0) == pytest.approx((90.0, 90.0))
    theta, phi = inverse_direction_cosines(1.0, 0.0)
    assert theta == pytest.approx(90.0)
    assert phi == pytest.approx(0.0, abs=1e-6)


def test_inverse_round_trips_forward_map():
    rng = np.random.default_rng(5)
    for _ in range(50):
        theta = rng.uniform(1.0, 179.0)
        phi = rng.uniform(0.0, 180.0)
        tc, pc = direction_cosines(theta, phi)
        theta_back, phi_back = inverse_direction_cosines(float(tc), float(pc))
        assert theta_back == pytest.approx(theta, abs=1e-6)
        assert phi_back == pytest.approx(phi, abs=1e-6)


def test_inverse_accepts_rounded_literals():
    theta, phi = inverse_direction_cosines(0.353553, 0.707107)
    assert theta == pytest.approx(45.0, abs=1e-4)
    assert phi == pytest.approx(60.0, abs=1e-4)


def test_inverse_rejects_unphysical_pairs():
    with pytest.raises(InvalidDirectionError):
        inverse_direction_cosines(0.9, 0.9)
    with pytest.raises(InvalidDirectionError):
        inverse_direction_cosines(0.0, 1.0)


def test_alternate_convention_round_trip():
    tc, pc = direction_cosines(45.0, 60.0, convention="sin_sin")
    assert tc == pytest.approx(COS45_PAIR[0], abs=1e-12)
    assert pc == pytest.approx(math.sin(math.radians(45)) * math.sin(math.radians(60)), abs=1e-12)
    theta, phi = inverse_direction_cosines(tc, pc, convention="sin_sin")
    assert theta == pytest.approx(45.0, abs=1e-6)
    assert phi == pytest.approx(60.0, abs=1e-6)
    with pytest.raises(ConfigurationError):
        direction_cosines(45.0, 60.0, convention="bogus")


# ---------------------------------------------------------------------------
# steering vectors
# ---------------------------------------------------------------------------

def test_steering_origin_antenna_is_unity():
    a = steering_vector(np.array([[0.0, 0.0]]), 0.73, -0.41)
    assert a[0] == pytest.approx(1.0 + 0.0j)


def test_steering_half_wavelength_offset_flips_sign():
    a = steering_vector(np.array([[0.5, 0.0]]), 1.0, 0.0)
    assert a[0] == pytest.approx(-1.0 + 0.0j, abs=1e-12)


def test_steering_broadside_is_all_ones():
    layout = build_pma_layout(4.0, 0.5, 9)
    a = steering_vector(layout, 0.0, 0.0)
    np.testing.assert_array_equal(a, np.ones(9, dtype=complex))


def test_steering_entries_unit_modulus():
    rng = np.random.default_rng(9)
    layout = build_pma_layout(8.0, 0.5, 36)
    for _ in range(20):
        tc, pc = rng.uniform(-1, 1, size=2)
        np.testing.assert_allclose(np.abs(steering_vector(layout, tc, pc)), 1.0, atol=1e-12)


def test_steering_translation_adds_global_phase():
    rng = np.random.default_rng(13)
    layout = build_pma_layout(4.0, 0.5, 6)
    for _ in range(10):
        tc, pc = rng.uniform(-0.9, 0.9, size=2)
        shift = rng.uniform(-3, 3, size=2)
        base = steering_vector(layout.positions, tc, pc)
        shifted = steering_vector(layout.positions + shift, tc, pc)
        phase = np.exp(2j * np.pi * (shift[0] * tc + shift[1] * pc))
        np.testing.assert_allclose(shifted, base * phase, atol=1e-12)


def test_steering_matrix_stacks_vectors():
    layout = build_pma_layout(4.0, 0.5, 6)
    dirs = np.array([[0.2, -0.3], [0.5, 0.1]])
    mat = steering_matrix(layout, dirs)
    assert mat.shape == (6, 2)
    np.testing.assert_allclose(mat[:, 1], steering_vector(layout, 0.5, 0.1), atol=1e-14)


# ---------------------------------------------------------------------------
# source sets
# ---------------------------------------------------------------------------

def test_source_set_validation():
    with pytest.raises(ConfigurationError):
        SourceSet.single(0.0, 60.0)  # elevation must be inside (0, 180)
    with pytest.raises(ConfigurationError):
        SourceSet.single(45.0, 181.0)
    with pytest.raises(ConfigurationError):
        SourceSet.single(45.0, 60.0, power=0.0)
    sources = SourceSet(np.array([45.0, 135.0]), np.array([60.0, 115.0]), np.ones(2))
    assert sources.n_sources == 2
    assert sources.direction_cosines().shape == (2, 2)


# ---------------------------------------------------------------------------
# snapshot synthesis
# ---------------------------------------------------------------------------

def test_synthesis_deterministic_for_fixed_seed():
    layout = build_pma_layout(4.0, 0.5, 9)
    sources = SourceSet.single(45.0, 60.0)
    a = synthesize_snapshots(layout, sources, 16, 10.0, seed=42)
    b = synthesize_snapshots(layout, sources, 16, 10.0, seed=42)
    c = synthesize_snapshots(layout, sources, 16, 10.0, seed=43)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_noiseless_single_source_single_snapshot_is_rank_one():
    layout = build_pma_layout(4.0, 0.5, 9)
    sources = SourceSet.single(45.0, 60.0)
    snap = synthesize_snapshots(layout, sources, 1, math.inf, seed=1)
    assert snap.noise_variance == 0.0
    a = steering_vector(layout, *direction_cosines(45.0, 60.0))
    ratios = snap.data[:, 0] / a
    np.testing.assert_allclose(ratios, ratios[0], atol=1e-12)


def test_snr_definition_sets_noise_variance():
    assert noise_variance_for_snr(20.0, [1.0]) == pytest.approx(0.01)
    assert noise_variance_for_snr(0.0, [2.0, 4.0]) == pytest.approx(3.0)
    assert noise_variance_for_snr(math.inf, [1.0]) == 0.0


def test_empirical_noise_power_matches_snr():
    # Same seed with and without noise shares the source draws, so the
    # difference isolates the noise matrix: ~1e5 entries at snr 20 dB.
    layout = build_pma_layout(8.0, 0.5, 36)
    sources = SourceSet.single(45.0, 60.0)
    t = 2800  # 36 * 2800 > 1e5 entries
    noisy = synthesize_snapshots(layout, sources, t, 20.0, seed=77)
    clean = synthesize_snapshots(layout, sources, t, math.inf, seed=77)
    noise = noisy.data - clean.data
    power = float(np.mean(np.abs(noise) ** 2))
    assert abs(power - 0.01) / 0.01 < 0.02


def test_snapshot_matrix_shape_checks():
    with pytest.raises(ConfigurationError):
        synthesize_snapshots(np.array([[0.0, 0.0]]), SourceSet.single(45, 60), 0, 10.0, seed=0)
