import math

import numpy as np
import pytest
from sklearn.base import clone

from madoa import (
    ConfigurationError,
    Music2D,
    NonHermitianError,
    SourceSet,
    SpectrumGrid,
    SteeringGrid,
    SubspaceError,
    build_pma_layout,
    build_ura_layout,
    direction_cosines,
    find_peaks,
    grid_axis,
    hermitian_eig,
    inverse_direction_cosines,
    music_spectrum,
    sample_covariance,
    save_spectrum_csv,
    steering_vector,
    synthesize_snapshots,
)

LAYOUT_9 = build_pma_layout(4.0, 0.5, 9)


def on_grid_source(theta_cos, phi_cos):
    """Source angles whose cosine pair lands exactly on the given values."""
    theta, phi = inverse_direction_cosines(theta_cos, phi_cos)
    return SourceSet.single(theta, phi)


# ---------------------------------------------------------------------------
# sample covariance
# ---------------------------------------------------------------------------

def test_covariance_single_snapshot_rank_one():
    rng = np.random.default_rng(0)
    y = rng.normal(size=(5, 1)) + 1j * rng.normal(size=(5, 1))
    r = sample_covariance(y)
    np.testing.assert_allclose(r, y @ y.conj().T, atol=1e-12)
    np.testing.assert_array_equal(r, r.conj().T)


def test_covariance_noiseless_single_source_converges():
    sources = SourceSet.single(45.0, 60.0)
    snaps = synthesize_snapshots(LAYOUT_9, sources, 10_000, math.inf, seed=21)
    r = sample_covariance(snaps)
    a = steering_vector(LAYOUT_9, *direction_cosines(45.0, 60.0))
    target = np.outer(a, a.conj())
    rel = np.linalg.norm(r - target) / np.linalg.norm(target)
    assert rel < 0.02
    eigvals, eigvecs = hermitian_eig(r)
    alignment = abs(eigvecs[:, 0].conj() @ a) / np.linalg.norm(a)
    assert alignment == pytest.approx(1.0, abs=1e-10)


def test_covariance_pure_noise_approaches_identity():
    rng = np.random.default_rng(2024)
    t = 100_000
    sigma2 = 0.3
    noise = math.sqrt(sigma2 / 2) * (
        rng.standard_normal((6, t)) + 1j * rng.standard_normal((6, t))
    )
    r = sample_covariance(noise)
    rel = np.linalg.norm(r - sigma2 * np.eye(6)) / np.linalg.norm(sigma2 * np.eye(6))
    assert rel < 0.02


# ---------------------------------------------------------------------------
# Hermitian eigendecomposition
# ---------------------------------------------------------------------------

def test_eig_identity():
    eigvals, eigvecs = hermitian_eig(np.eye(4))
    np.testing.assert_allclose(eigvals, np.ones(4))
    np.testing.assert_allclose(eigvecs @ eigvecs.conj().T, np.eye(4), atol=1e-12)


def test_eig_rank_one_steering_outer_product():
    a = steering_vector(LAYOUT_9, 0.3, -0.2)
    eigvals, _ = hermitian_eig(np.outer(a, a.conj()))
    assert eigvals[0] == pytest.approx(9.0, rel=1e-12)
    assert np.all(np.abs(eigvals[1:]) < 1e-10)


def test_eig_reconstructs_random_hermitian():
    rng = np.random.default_rng(8)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    r = (m + m.conj().T) / 2
    eigvals, eigvecs = hermitian_eig(r)
    assert np.all(np.diff(eigvals) <= 1e-12)  # descending
    recon = eigvecs @ np.diag(eigvals) @ eigvecs.conj().T
    assert np.linalg.norm(recon - r) < 1e-8 * np.linalg.norm(r)
    np.testing.assert_allclose(eigvecs.conj().T @ eigvecs, np.eye(8), atol=1e-12)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitianError):
        hermitian_eig(np.array([[1.0, 2.0], [0.5, 1.0]]))


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def test_grid_axis_covers_unit_square_inclusive():
    axis = grid_axis(0.005)
    assert axis.size == 401
    assert axis[0] == -1.0 and axis[-1] == 1.0
    steps = np.diff(axis)
    assert np.allclose(steps, steps[0], atol=1e-12)
    with pytest.raises(ConfigurationError):
        grid_axis(0.7)


def test_spectrum_noiseless_on_grid_argmax_exact():
    sources = on_grid_source(0.35, 0.7)
    snaps = synthesize_snapshots(LAYOUT_9, sources, 1, math.inf, seed=3)
    grid = music_spectrum(sample_covariance(snaps), LAYOUT_9, 1, grid_step=0.05)
    i, j = grid.argmax_node()
    assert grid.theta_cos_axis[i] == pytest.approx(0.35, abs=1e-12)
    assert grid.phi_cos_axis[j] == pytest.approx(0.70, abs=1e-12)


def test_spectrum_rejects_too_many_sources():
    r = np.eye(9)
    with pytest.raises(SubspaceError):
        music_spectrum(r, LAYOUT_9, 9, grid_step=0.1)


def test_spectrum_values_positive_and_finite():
    sources = SourceSet.single(45.0, 60.0)
    snaps = synthesize_snapshots(LAYOUT_9, sources, 8, 0.0, seed=5)
    grid = music_spectrum(sample_covariance(snaps), LAYOUT_9, 1, grid_step=0.05)
    assert np.all(np.isfinite(grid.values))
    assert np.all(grid.values > 0)


def test_spectrum_invariant_under_antenna_permutation():
    sources = SourceSet.single(45.0, 60.0)
    snaps = synthesize_snapshots(LAYOUT_9, sources, 16, 10.0, seed=6)
    grid = music_spectrum(sample_covariance(snaps), LAYOUT_9, 1, grid_step=0.1)
    rng = np.random.default_rng(7)
    perm = rng.permutation(9)
    permuted = music_spectrum(
        sample_covariance(snaps.data[perm]), LAYOUT_9.positions[perm], 1, grid_step=0.1
    )
    np.testing.assert_allclose(grid.values, permuted.values, rtol=1e-9)


def test_spectrum_signal_and_noise_subspace_paths_agree():
    # 5 sources on 9 antennas uses the noise-subspace side; compare against
    # the same projection computed through the signal side by hand.
    rng = np.random.default_rng(11)
    dirs = np.column_stack([rng.uniform(-0.6, 0.6, 5), rng.uniform(-0.6, 0.6, 5)])
    sources = SourceSet(
        *(np.array(v) for v in zip(*[inverse_direction_cosines(*d) for d in dirs])),
        np.ones(5),
    )
    snaps = synthesize_snapshots(LAYOUT_9, sources, 64, 10.0, seed=12)
    r = sample_covariance(snaps)
    grid = music_spectrum(r, LAYOUT_9, 5, grid_step=0.25)
    eigvals, eigvecs = hermitian_eig(r)
    steering = SteeringGrid(LAYOUT_9, 0.25)
    signal_proj = eigvecs[:, :5].conj().T @ steering.matrix
    denom = 9.0 - np.einsum("ij,ij->j", signal_proj.real, signal_proj.real) \
        - np.einsum("ij,ij->j", signal_proj.imag, signal_proj.imag)
    manual = 1.0 / np.maximum(denom, 1e-12)
    np.testing.assert_allclose(grid.values.ravel(), manual, rtol=1e-9)


def test_noiseless_multi_source_eigenvalue_count():
    sources = SourceSet(np.array([45.0, 70.0]), np.array([60.0, 130.0]), np.ones(2))
    snaps = synthesize_snapshots(LAYOUT_9, sources, 16, math.inf, seed=13)
    eigvals, _ = hermitian_eig(sample_covariance(snaps))
    assert np.all(eigvals[2:] < 1e-8 * eigvals[0])


# ---------------------------------------------------------------------------
# peak extraction
# ---------------------------------------------------------------------------

def test_find_peaks_single_noiseless_source():
    truth = (0.35, 0.7)
    snaps = synthesize_snapshots(LAYOUT_9, on_grid_source(*truth), 1, math.inf, seed=1)
    grid = music_spectrum(sample_covariance(snaps), LAYOUT_9, 1, grid_step=0.05)
    result = find_peaks(grid, 1)
    assert not result.under_resolved
    est = result.estimates[0]
    assert est.theta_cos == pytest.approx(truth[0], abs=1e-9)
    assert est.phi_cos == pytest.approx(truth[1], abs=1e-9)


def test_find_peaks_off_grid_interpolation_tightens():
    truth = (0.3635, 0.6879)  # deliberately off the 0.05 grid
    snaps = synthesize_snapshots(LAYOUT_9, on_grid_source(*truth), 1, math.inf, seed=2)
    grid = music_spectrum(sample_covariance(snaps), LAYOUT_9, 1, grid_step=0.05)
    i, j = grid.argmax_node()
    node_err = math.hypot(grid.theta_cos_axis[i] - truth[0], grid.phi_cos_axis[j] - truth[1])
    assert node_err <= 0.05 / 2 * math.sqrt(2) + 1e-12
    est = find_peaks(grid, 1).estimates[0]
    refined_err = math.hypot(est.theta_cos - truth[0], est.phi_cos - truth[1])
    assert refined_err < node_err
    assert refined_err < 5e-3


def test_find_peaks_two_separated_sources_exact():
    # exact two-source covariance, both directions on the 0.05 grid
    a1 = steering_vector(LAYOUT_9, 0.35, 0.70)
    a2 = steering_vector(LAYOUT_9, -0.40, -0.25)
    r = np.outer(a1, a1.conj()) + np.outer(a2, a2.conj())
    grid = music_spectrum(r, LAYOUT_9, 2, grid_step=0.05)
    # grid argmax oracle: both truths are exact nodes of the grid
    values = grid.values.copy()
    i1, j1 = np.unravel_index(np.argmax(values), values.shape)
    values[i1, j1] = -np.inf
    i2, j2 = np.unravel_index(np.argmax(values), values.shape)
    nodes = sorted(
        (round(grid.theta_cos_axis[i], 9), round(grid.phi_cos_axis[j], 9))
        for i, j in ((i1, j1), (i2, j2))
    )
    assert nodes == [(-0.40, -0.25), (0.35, 0.70)]
    # refined estimates stay within half a cell of the truths; the other
    # source's projection adds an O(step^2) vertex shift, nothing more
    result = find_peaks(grid, 2)
    got = sorted((e.theta_cos, e.phi_cos) for e in result.estimates)
    for (gt, gp), (tt, tp) in zip(got, [(-0.40, -0.25), (0.35, 0.70)]):
        assert math.hypot(gt - tt, gp - tp) < 5e-4


def test_find_peaks_flat_grid_under_resolved():
    axis = grid_axis(0.25)
    grid = SpectrumGrid(axis, axis, np.ones((axis.size, axis.size)))
    result = find_peaks(grid, 1)
    assert result.estimates == ()
    assert result.under_resolved


def test_find_peaks_ignores_peaks_outside_unit_disk():
    axis = grid_axis(0.25)
    values = np.ones((axis.size, axis.size))
    # global max outside the physical cone, secondary max inside
    i_out = int(np.argmin(np.abs(axis - 0.75)))
    j_out = int(np.argmin(np.abs(axis - 0.75)))
    values[i_out, j_out] = 10.0
    i_in = int(np.argmin(np.abs(axis - 0.0)))
    values[i_in, i_in] = 5.0
    grid = SpectrumGrid(axis, axis, values)
    result = find_peaks(grid, 1)
    assert len(result.estimates) == 1
    assert result.estimates[0].theta_cos == pytest.approx(0.0, abs=1e-9)


def test_find_peaks_tie_breaks_lexicographically():
    axis = grid_axis(0.25)
    values = np.ones((axis.size, axis.size))
    mid = axis.size // 2
    values[mid - 2, mid] = 7.0
    values[mid + 2, mid] = 7.0
    grid = SpectrumGrid(axis, axis, values)
    result = find_peaks(grid, 1)
    assert result.estimates[0].theta_cos == pytest.approx(axis[mid - 2])


def test_spectrum_csv_export(tmp_path):
    axis = grid_axis(0.5)
    values = np.full((axis.size, axis.size), 2.0)
    grid = SpectrumGrid(axis, axis, values)
    path = tmp_path / "spec.csv"
    save_spectrum_csv(grid, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "theta_cos,phi_cos,power"
    assert len(lines) == 1 + axis.size**2
    assert lines[1] == "-1,-1,2"


# ---------------------------------------------------------------------------
# estimator API
# ---------------------------------------------------------------------------

def test_estimator_fit_sets_attributes():
    est = Music2D(LAYOUT_9, n_sources=1, grid_step=0.05)
    snaps = synthesize_snapshots(LAYOUT_9, SourceSet.single(45, 60), 16, 20.0, seed=4)
    assert est.fit(snaps) is est
    assert est.covariance_.shape == (9, 9)
    assert est.eigenvalues_.shape == (9,)
    assert isinstance(est.spectrum_, SpectrumGrid)
    assert len(est.estimates_) == 1
    assert est.under_resolved_ is False
    assert est.estimates_[0].theta_deg == pytest.approx(45.0, abs=2.0)


def test_estimator_sklearn_params_round_trip():
    est = Music2D(LAYOUT_9, n_sources=2, grid_step=0.1)
    params = est.get_params()
    assert params["n_sources"] == 2 and params["grid_step"] == 0.1
    est.set_params(n_sources=3)
    assert est.n_sources == 3
    cloned = clone(est)
    assert cloned.n_sources == 3
    np.testing.assert_array_equal(cloned.layout.positions, est.layout.positions)


def test_estimator_reuses_steering_between_fits():
    est = Music2D(LAYOUT_9, n_sources=1, grid_step=0.1)
    snaps = synthesize_snapshots(LAYOUT_9, SourceSet.single(45, 60), 4, 10.0, seed=5)
    est.fit(snaps)
    first = est._steering_cache[1]
    est.fit(snaps)
    assert est._steering_cache[1] is first


def test_estimator_rejects_mismatched_snapshots():
    est = Music2D(LAYOUT_9, n_sources=1, grid_step=0.1)
    with pytest.raises(ConfigurationError):
        est.fit(np.zeros((5, 3), dtype=complex))
