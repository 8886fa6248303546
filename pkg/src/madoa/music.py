"""2D MUSIC estimation over a direction-cosine grid.

The pipeline is: sample covariance -> Hermitian eigendecomposition ->
noise-subspace projection evaluated on a uniform (theta_cos, phi_cos) grid
covering [-1, 1]^2 -> peak extraction with sub-cell refinement.

:class:`Music2D` wraps the pipeline in a scikit-learn style estimator
(``fit`` + trailing-underscore attributes, ``get_params``/``set_params``)
so it composes with that ecosystem; the underlying steps remain available
as plain functions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import ConfigurationError, NonHermitianError, SubspaceError
from .signal import inverse_direction_cosines, steering_matrix
from .validation import check_count, check_positions, check_snapshots

# Floor applied to the projection denominator before taking the reciprocal;
# keeps the spectrum finite at directions orthogonal to the noise subspace
# without moving the argmax.
DENOMINATOR_FLOOR = 1e-12

_HERMITIAN_RTOL = 1e-9


@dataclass(frozen=True)
class SpectrumGrid:
    """Pseudo-spectrum sampled on a uniform direction-cosine grid.

    ``values[i, j]`` is the spectrum at ``(theta_cos_axis[i], phi_cos_axis[j])``.
    """

    theta_cos_axis: np.ndarray
    phi_cos_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        ta = np.asarray(self.theta_cos_axis, dtype=float)
        pa = np.asarray(self.phi_cos_axis, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        for name, axis in (("theta_cos_axis", ta), ("phi_cos_axis", pa)):
            if axis.ndim != 1 or axis.size < 2:
                raise ConfigurationError(f"{name} must be 1-D with >= 2 samples")
            steps = np.diff(axis)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=0, atol=1e-12):
                raise ConfigurationError(f"{name} must be strictly increasing with uniform step")
        if vals.shape != (ta.size, pa.size):
            raise ConfigurationError(
                f"values shape {vals.shape} does not match axes ({ta.size}, {pa.size})"
            )
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ConfigurationError("spectrum values must be finite and non-negative")
        for name, arr in (("theta_cos_axis", ta), ("phi_cos_axis", pa), ("values", vals)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def step(self) -> float:
        return float(self.theta_cos_axis[1] - self.theta_cos_axis[0])

    def argmax_node(self) -> tuple[int, int]:
        """Indices of the global maximum."""
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return int(i), int(j)


@dataclass(frozen=True)
class DoaEstimate:
    """One extracted source direction, in cosines and in degrees."""

    theta_cos: float
    phi_cos: float
    theta_deg: float
    phi_deg: float
    peak_value: float


@dataclass(frozen=True)
class PeakSearchResult:
    """Outcome of peak extraction; under-resolution is a flag, not an error."""

    estimates: tuple
    n_requested: int

    @property
    def under_resolved(self) -> bool:
        return len(self.estimates) < self.n_requested


class SteeringGrid:
    """Precomputed steering matrix for every node of a direction-cosine grid.

    Building this is the expensive part of a spectrum evaluation; reuse one
    instance across Monte Carlo trials that share a layout and grid. The
    stored matrix is read-only, so concurrent readers are safe.
    """

    def __init__(self, layout, grid_step: float = 0.005):
        self.positions = check_positions(layout)
        self.grid_step = float(grid_step)
        self.theta_cos_axis = grid_axis(grid_step)
        self.phi_cos_axis = self.theta_cos_axis
        ev = np.exp(2j * math.pi * np.outer(self.positions[:, 0], self.theta_cos_axis))
        ew = np.exp(2j * math.pi * np.outer(self.positions[:, 1], self.phi_cos_axis))
        matrix = np.einsum("ng,nh->ngh", ev, ew).reshape(self.positions.shape[0], -1)
        matrix.setflags(write=False)
        self.matrix = matrix

    @property
    def n_antennas(self) -> int:
        return self.positions.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.theta_cos_axis.size, self.phi_cos_axis.size)


def grid_axis(grid_step: float) -> np.ndarray:
    """Uniform axis covering [-1, 1] inclusive with step close to ``grid_step``.

    The step is snapped so that an integer number of cells spans the range.
    """
    if not (0.0 < grid_step <= 0.5):
        raise ConfigurationError(f"grid_step must lie in (0, 0.5], got {grid_step}")
    n_cells = max(int(round(2.0 / grid_step)), 4)
    return np.linspace(-1.0, 1.0, n_cells + 1)


def sample_covariance(snapshots) -> np.ndarray:
    """R = Y Y^H / T, symmetrised so it is Hermitian to the last bit."""
    data = check_snapshots(snapshots)
    r = data @ data.conj().T / data.shape[1]
    return (r + r.conj().T) / 2.0


def hermitian_eig(r) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(eigenvalues, eigenvectors)`` with orthonormal eigenvector
    columns matching the eigenvalue order. Raises
    :class:`NonHermitianError` when the input breaks the Hermitian contract
    (checked relative to the largest entry, floored at 1).
    """
    r = np.asarray(r, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ConfigurationError(f"expected a square matrix, got shape {r.shape}")
    scale = max(1.0, float(np.abs(r).max()))
    asym = float(np.abs(r - r.conj().T).max())
    if asym > _HERMITIAN_RTOL * scale:
        raise NonHermitianError(
            f"matrix deviates from Hermitian by {asym:.3g} (limit {_HERMITIAN_RTOL * scale:.3g})"
        )
    eigvals, eigvecs = np.linalg.eigh((r + r.conj().T) / 2.0)
    return eigvals[::-1], eigvecs[:, ::-1]


def music_spectrum(
    r,
    layout,
    n_sources: int,
    grid_step: float = 0.005,
    steering: SteeringGrid | None = None,
) -> SpectrumGrid:
    """Noise-subspace pseudo-spectrum on the full direction-cosine grid.

    The spectrum is ``1 / (a^H U_n U_n^H a)`` per grid node, where ``U_n``
    spans the (N - n_sources)-dimensional noise subspace of ``r``. Because
    the steering entries have unit modulus, the projection is evaluated
    through the signal subspace as ``N - ||U_s^H a||^2`` whenever that side
    is smaller, which is algebraically identical and much cheaper.

    Pass a prebuilt :class:`SteeringGrid` to amortise the grid setup across
    repeated calls with the same layout.
    """
    pts = check_positions(layout)
    n = pts.shape[0]
    n_sources = check_count(n_sources, "n_sources")
    if n_sources >= n:
        raise SubspaceError(
            f"n_sources={n_sources} leaves no noise subspace for {n} antennas"
        )
    if steering is None:
        steering = SteeringGrid(pts, grid_step)
    else:
        if steering.n_antennas != n:
            raise ConfigurationError(
                f"steering grid was built for {steering.n_antennas} antennas, layout has {n}"
            )
    eigvals, eigvecs = hermitian_eig(r)
    if eigvals.size != n:
        raise ConfigurationError(
            f"covariance is {eigvals.size}x{eigvals.size}, layout has {n} antennas"
        )
    if n_sources <= n - n_sources:
        basis = eigvecs[:, :n_sources]
        proj = basis.conj().T @ steering.matrix
        denom = n - _column_norms_sq(proj)
    else:
        basis = eigvecs[:, n_sources:]
        proj = basis.conj().T @ steering.matrix
        denom = _column_norms_sq(proj)
    denom = np.maximum(denom, DENOMINATOR_FLOOR)
    values = (1.0 / denom).reshape(steering.shape)
    return SpectrumGrid(steering.theta_cos_axis, steering.phi_cos_axis, values)


def _column_norms_sq(matrix: np.ndarray) -> np.ndarray:
    return (
        np.einsum("ij,ij->j", matrix.real, matrix.real)
        + np.einsum("ij,ij->j", matrix.imag, matrix.imag)
    )


def _strict_local_maxima(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict 8-neighbourhood local maxima (edges padded with -inf)."""
    padded = np.full((values.shape[0] + 2, values.shape[1] + 2), -np.inf)
    padded[1:-1, 1:-1] = values
    centre = padded[1:-1, 1:-1]
    mask = np.ones(values.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= centre > padded[1 + di : 1 + di + values.shape[0],
                                    1 + dj : 1 + dj + values.shape[1]]
    return np.nonzero(mask)


def _parabolic_offset(left: float, centre: float, right: float) -> float:
    """Sub-cell offset of the minimum of a parabola through three samples.

    Applied to the reciprocal spectrum (the projection denominator), which
    is locally quadratic around a true direction; fitting the spectrum's
    logarithm instead degrades sharply at high SNR where the peak is much
    narrower than a grid cell.
    """
    curvature = left - 2.0 * centre + right
    if curvature <= 0.0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))


def find_peaks(grid: SpectrumGrid, n_sources: int) -> PeakSearchResult:
    """Extract the ``n_sources`` largest spectrum peaks as DOA estimates.

    Candidate peaks are strict local maxima over the 8-neighbourhood whose
    grid node lies inside the unit direction disk; they are ranked by value
    (ties by ascending (theta_cos, phi_cos) node) and refined per axis by a
    parabola fitted to the reciprocal spectrum. If fewer maxima exist than
    requested, all found peaks are returned and the result is flagged
    under-resolved.
    """
    n_sources = check_count(n_sources, "n_sources")
    values = grid.values
    ii, jj = _strict_local_maxima(values)
    feasible = grid.theta_cos_axis[ii] ** 2 + grid.phi_cos_axis[jj] ** 2 <= 1.0
    ii, jj = ii[feasible], jj[feasible]
    order = np.lexsort((jj, ii, -values[ii, jj]))
    ii, jj = ii[order[:n_sources]], jj[order[:n_sources]]

    recip = 1.0 / np.maximum(values, np.finfo(float).tiny)
    step = grid.step
    estimates = []
    for i, j in zip(ii, jj):
        tc = float(grid.theta_cos_axis[i])
        pc = float(grid.phi_cos_axis[j])
        if 0 < i < values.shape[0] - 1:
            tc += step * _parabolic_offset(recip[i - 1, j], recip[i, j], recip[i + 1, j])
        if 0 < j < values.shape[1] - 1:
            pc += step * _parabolic_offset(recip[i, j - 1], recip[i, j], recip[i, j + 1])
        # Refinement can push a rim node slightly outside the unit disk;
        # project back so the angle conversion stays defined.
        radius = math.hypot(tc, pc)
        if radius > 1.0:
            tc, pc = tc / radius, pc / radius
        pc_safe = float(np.clip(pc, -1.0 + 1e-12, 1.0 - 1e-12))
        theta_deg, phi_deg = inverse_direction_cosines(tc, pc_safe)
        estimates.append(
            DoaEstimate(
                theta_cos=tc,
                phi_cos=pc,
                theta_deg=theta_deg,
                phi_deg=phi_deg,
                peak_value=float(values[i, j]),
            )
        )
    return PeakSearchResult(estimates=tuple(estimates), n_requested=n_sources)


def save_spectrum_csv(grid: SpectrumGrid, path) -> None:
    """Write the grid row-major as theta_cos,phi_cos,power (9 sig. digits)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_cos", "phi_cos", "power"])
        for i, tc in enumerate(grid.theta_cos_axis):
            for j, pc in enumerate(grid.phi_cos_axis):
                writer.writerow([f"{tc:.9g}", f"{pc:.9g}", f"{grid.values[i, j]:.9g}"])


class Music2D(BaseEstimator):
    """Scikit-learn style 2D MUSIC estimator.

    Parameters
    ----------
    layout : ArrayLayout or (n, 2) array
        Antenna positions in wavelengths.
    n_sources : int
        Number of sources to estimate (must be smaller than the array size).
    grid_step : float
        Direction-cosine grid step; the grid covers [-1, 1] inclusive.

    After ``fit(Y)`` (``Y`` is a SnapshotMatrix or complex (n, T) array) the
    instance exposes ``covariance_``, ``eigenvalues_``, ``eigenvectors_``,
    ``spectrum_``, ``estimates_`` (strongest first) and ``under_resolved_``.
    Instances are not safe for concurrent ``fit`` calls; use the functional
    API with a shared :class:`SteeringGrid` for parallel Monte Carlo work.
    """

    def __init__(self, layout=None, n_sources: int = 1, grid_step: float = 0.005):
        self.layout = layout
        self.n_sources = n_sources
        self.grid_step = grid_step

    def _steering(self) -> SteeringGrid:
        pts = check_positions(self.layout, name="layout")
        key = (pts.tobytes(), float(self.grid_step))
        cached = getattr(self, "_steering_cache", None)
        if cached is None or cached[0] != key:
            cached = (key, SteeringGrid(pts, self.grid_step))
            self._steering_cache = cached
        return cached[1]

    def fit(self, snapshots, y=None) -> "Music2D":
        """Estimate source directions from a snapshot matrix."""
        steering = self._steering()
        data = check_snapshots(snapshots, n_antennas=steering.n_antennas)
        self.covariance_ = sample_covariance(data)
        self.eigenvalues_, self.eigenvectors_ = hermitian_eig(self.covariance_)
        self.spectrum_ = music_spectrum(
            self.covariance_,
            steering.positions,
            self.n_sources,
            steering=steering,
        )
        peaks = find_peaks(self.spectrum_, self.n_sources)
        self.estimates_ = list(peaks.estimates)
        self.under_resolved_ = peaks.under_resolved
        return self

    def fit_estimate(self, snapshots) -> list:
        """Convenience: ``fit`` then return ``estimates_``."""
        return self.fit(snapshots).estimates_
