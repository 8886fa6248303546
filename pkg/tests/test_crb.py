import math

import numpy as np
import pytest

from madoa import (
    ConfigurationError,
    SingularGeometryError,
    build_pma_layout,
    build_sma_layout,
    build_uca_layout,
    build_ura_layout,
    crb,
    moment_stats,
    q_factor,
    shape_position_objective,
)

EIGHT_PI_SQ = 8.0 * math.pi**2


def test_q_factor_unit_inputs():
    assert q_factor(1.0, 1, 1.0, 1) == pytest.approx(1.0 / EIGHT_PI_SQ, rel=1e-15)
    assert q_factor(1.0, 1, 1.0, 1) == pytest.approx(0.012665147955292222, rel=1e-12)


def test_q_factor_linear_in_snapshots():
    assert q_factor(1.0, 2, 1.0, 1) == q_factor(1.0, 1, 1.0, 1) / 2.0


def test_q_factor_paper_operating_point():
    # 20 dB SNR, unit source power, one snapshot, 36 antennas
    assert q_factor(0.01, 1, 1.0, 36) == pytest.approx(0.01 / (EIGHT_PI_SQ * 36), rel=1e-15)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(noise_var=0.0, snapshots=1, source_power=1.0, n_antennas=1),
        dict(noise_var=1.0, snapshots=0, source_power=1.0, n_antennas=1),
        dict(noise_var=1.0, snapshots=1, source_power=-1.0, n_antennas=1),
    ],
)
def test_q_factor_rejects_nonpositive_inputs(kwargs):
    with pytest.raises(ConfigurationError):
        q_factor(**kwargs)


def test_crb_decoupled_axes():
    stats = moment_stats(build_uca_layout(1.0, 3))  # var 0.5, cov 0
    result = crb(stats, 1.0)
    assert result.crb_theta_cos == pytest.approx(2.0, rel=1e-12)
    assert result.crb_phi_cos == pytest.approx(2.0, rel=1e-12)
    assert result.q_factor == 1.0


def test_crb_collinear_layout_raises():
    stats = moment_stats(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))
    with pytest.raises(SingularGeometryError, match="var_y"):
        crb(stats, 1.0)


def test_crb_diagonal_layout_raises():
    stats = moment_stats(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
    with pytest.raises(SingularGeometryError, match="collinear"):
        crb(stats, 1.0)


def test_crb_scales_inverse_square_with_aperture():
    rng = np.random.default_rng(3)
    for _ in range(10):
        pts = rng.normal(size=(12, 2))
        scale = rng.uniform(1.5, 4.0)
        base = crb(moment_stats(pts), 1.0)
        scaled = crb(moment_stats(pts * scale), 1.0)
        assert scaled.crb_theta_cos == pytest.approx(base.crb_theta_cos / scale**2, rel=1e-9)
        assert scaled.crb_phi_cos == pytest.approx(base.crb_phi_cos / scale**2, rel=1e-9)


def test_objective_reduces_by_substitution():
    layout = build_pma_layout(8.0, 0.5, 36)
    stats = moment_stats(layout)
    assert shape_position_objective(stats) == pytest.approx(stats.mean_rho2, abs=1e-9)


def test_objective_ura_hand_value():
    stats = moment_stats(build_ura_layout(2, 2, 1.0))
    assert shape_position_objective(stats) == pytest.approx(0.5, abs=1e-14)


def test_objective_zero_variance_raises():
    with pytest.raises(SingularGeometryError):
        shape_position_objective(moment_stats(np.array([[0.0, 0.0], [1.0, 0.0]])))


def test_triangular_region_beats_square_region():
    # the central comparative claim at the standard dimensions
    pma = shape_position_objective(moment_stats(build_pma_layout(8.0, 0.5, 36)))
    sma = shape_position_objective(moment_stats(build_sma_layout(5.26, 0.5, 36)))
    assert pma > sma


def test_objective_rotation_invariance():
    layout = build_pma_layout(8.0, 0.5, 36)
    base = shape_position_objective(moment_stats(layout))
    rng = np.random.default_rng(17)
    for _ in range(5):
        ang = rng.uniform(0, 2 * math.pi)
        rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
        rotated = layout.positions @ rot.T
        assert shape_position_objective(moment_stats(rotated)) == pytest.approx(base, abs=1e-9)


def test_objective_and_crb_sum_rank_families_identically():
    layouts = {
        "pma": build_pma_layout(8.0, 0.5, 36),
        "sma": build_sma_layout(5.26, 0.5, 36),
        "uca": build_uca_layout(2.86, 36),
        "ura": build_ura_layout(6, 6, 0.5),
    }
    q = q_factor(0.01, 1, 1.0, 36)
    objective_rank = sorted(
        layouts, key=lambda k: -shape_position_objective(moment_stats(layouts[k]))
    )
    crb_rank = sorted(
        layouts,
        key=lambda k: (
            crb(moment_stats(layouts[k]), q).crb_theta_cos
            + crb(moment_stats(layouts[k]), q).crb_phi_cos
        ),
    )
    assert objective_rank == crb_rank
    assert objective_rank[0] == "pma"
