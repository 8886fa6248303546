"""Far-field narrowband signal model: direction cosines, steering vectors,
and synthetic snapshot generation.

Directions are parameterised by the cosine pair (theta_cos, phi_cos) with
``theta_cos = sin(theta) * cos(phi)`` and ``phi_cos = cos(theta)`` by
default, where theta is elevation in (0, 180) degrees and phi azimuth in
[0, 180] degrees. The phase of antenna n for a direction is
``2*pi*(x_n*theta_cos + y_n*phi_cos)`` with positions in wavelengths.

The alternate convention ``phi_cos = sin(theta) * sin(phi)`` is available
through the ``convention`` flag for sensitivity checks; nothing else in the
package depends on which convention is active.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, InvalidDirectionError
from .validation import check_count, check_positions

CONVENTION_COS_THETA = "cos_theta"
CONVENTION_SIN_SIN = "sin_sin"
_CONVENTIONS = (CONVENTION_COS_THETA, CONVENTION_SIN_SIN)


@dataclass(frozen=True)
class SourceSet:
    """K far-field sources: elevation/azimuth in degrees and linear power."""

    theta_deg: np.ndarray
    phi_deg: np.ndarray
    power: np.ndarray

    def __post_init__(self) -> None:
        theta = np.atleast_1d(np.asarray(self.theta_deg, dtype=float))
        phi = np.atleast_1d(np.asarray(self.phi_deg, dtype=float))
        power = np.atleast_1d(np.asarray(self.power, dtype=float))
        if not (theta.shape == phi.shape == power.shape) or theta.ndim != 1:
            raise ConfigurationError("theta_deg, phi_deg and power must be 1-D and equal length")
        if theta.size < 1:
            raise ConfigurationError("a SourceSet needs at least one source")
        if np.any(theta <= 0.0) or np.any(theta >= 180.0):
            raise ConfigurationError("elevation must lie strictly inside (0, 180) degrees")
        if np.any(phi < 0.0) or np.any(phi > 180.0):
            raise ConfigurationError("azimuth must lie in [0, 180] degrees")
        if np.any(power <= 0.0):
            raise ConfigurationError("source powers must be positive")
        for name, arr in (("theta_deg", theta), ("phi_deg", phi), ("power", power)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def single(cls, theta_deg: float, phi_deg: float, power: float = 1.0) -> "SourceSet":
        return cls(np.array([theta_deg]), np.array([phi_deg]), np.array([power]))

    @property
    def n_sources(self) -> int:
        return self.theta_deg.size

    def direction_cosines(self, convention: str = CONVENTION_COS_THETA) -> np.ndarray:
        """(K, 2) array of (theta_cos, phi_cos) pairs."""
        tc, pc = direction_cosines(self.theta_deg, self.phi_deg, convention=convention)
        return np.column_stack([np.atleast_1d(tc), np.atleast_1d(pc)])


@dataclass(frozen=True)
class SnapshotMatrix:
    """Complex received-signal matrix (antennas x snapshots) plus noise power."""

    data: np.ndarray
    noise_variance: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=complex)
        if arr.ndim != 2:
            raise ConfigurationError("snapshot data must be a 2-D matrix")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n_antennas(self) -> int:
        return self.data.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]


def _check_convention(convention: str) -> str:
    if convention not in _CONVENTIONS:
        raise ConfigurationError(
            f"unknown direction-cosine convention {convention!r}; expected one of {_CONVENTIONS}"
        )
    return convention


def direction_cosines(theta_deg, phi_deg, convention: str = CONVENTION_COS_THETA):
    """Map (elevation, azimuth) in degrees to the cosine pair (theta_cos, phi_cos)."""
    _check_convention(convention)
    theta = np.deg2rad(theta_deg)
    phi = np.deg2rad(phi_deg)
    theta_cos = np.sin(theta) * np.cos(phi)
    if convention == CONVENTION_COS_THETA:
        phi_cos = np.cos(theta)
    else:
        phi_cos = np.sin(theta) * np.sin(phi)
    return theta_cos, phi_cos


def inverse_direction_cosines(
    theta_cos: float,
    phi_cos: float,
    convention: str = CONVENTION_COS_THETA,
    tol: float = 1e-12,
):
    """Recover (elevation, azimuth) in degrees from a cosine pair.

    For the default convention, requires |phi_cos| < 1 and
    |theta_cos| <= sin(theta) + tol; azimuth is returned in [0, 180], which
    round-trips :func:`direction_cosines` on that half-space. Raises
    :class:`InvalidDirectionError` for pairs outside the physical cone.
    """
    _check_convention(convention)
    if convention == CONVENTION_SIN_SIN:
        sin_theta = math.hypot(theta_cos, phi_cos)
        if sin_theta > 1.0 + tol:
            raise InvalidDirectionError(
                f"({theta_cos}, {phi_cos}) lies outside the unit direction disk"
            )
        # Upper-hemisphere convention: this pair cannot distinguish theta
        # from 180 - theta.
        theta = math.degrees(math.asin(min(sin_theta, 1.0)))
        phi = math.degrees(math.atan2(phi_cos, theta_cos))
        return theta, phi
    if abs(phi_cos) >= 1.0:
        raise InvalidDirectionError(f"|phi_cos| must be < 1, got {phi_cos}")
    theta_rad = math.acos(phi_cos)
    sin_theta = math.sin(theta_rad)
    if abs(theta_cos) > sin_theta + tol:
        raise InvalidDirectionError(
            f"|theta_cos|={abs(theta_cos):.6g} exceeds sin(theta)={sin_theta:.6g}"
        )
    phi_rad = math.acos(np.clip(theta_cos / sin_theta, -1.0, 1.0))
    return math.degrees(theta_rad), math.degrees(phi_rad)


def steering_vector(layout, theta_cos: float, phi_cos: float) -> np.ndarray:
    """Unit-modulus array response for one direction, one entry per antenna."""
    pts = check_positions(layout)
    phase = 2.0 * math.pi * (pts[:, 0] * theta_cos + pts[:, 1] * phi_cos)
    return np.exp(1j * phase)


def steering_matrix(layout, directions) -> np.ndarray:
    """Stack steering vectors for (K, 2) direction-cosine pairs into (N, K)."""
    pts = check_positions(layout)
    dirs = np.asarray(directions, dtype=float)
    if dirs.ndim == 1:
        dirs = dirs.reshape(1, 2)
    phase = 2.0 * math.pi * (
        np.outer(pts[:, 0], dirs[:, 0]) + np.outer(pts[:, 1], dirs[:, 1])
    )
    return np.exp(1j * phase)


def noise_variance_for_snr(snr_db: float, powers) -> float:
    """Noise power implied by an SNR in dB: mean source power / 10^(snr/10)."""
    mean_power = float(np.mean(np.asarray(powers, dtype=float)))
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return mean_power / 10.0 ** (snr_db / 10.0)


def synthesize_snapshots(
    layout,
    sources: SourceSet,
    n_snapshots: int,
    snr_db: float,
    seed,
    convention: str = CONVENTION_COS_THETA,
) -> SnapshotMatrix:
    """Draw a noisy snapshot matrix Y = A S + N.

    Source waveforms are i.i.d. circular complex Gaussian with the per-source
    powers; noise is circular complex Gaussian with variance set by
    :func:`noise_variance_for_snr` (``snr_db=inf`` gives a noiseless matrix).
    The draw order (sources first, then noise) is fixed, so a given ``seed``
    reproduces the matrix bit for bit. ``seed`` may be anything accepted by
    ``numpy.random.default_rng``.
    """
    pts = check_positions(layout)
    n_snapshots = check_count(n_snapshots, "n_snapshots")
    rng = np.random.default_rng(seed)
    amat = steering_matrix(pts, sources.direction_cosines(convention))
    k = sources.n_sources
    scale = np.sqrt(sources.power[:, None] / 2.0)
    waveforms = scale * (
        rng.standard_normal((k, n_snapshots)) + 1j * rng.standard_normal((k, n_snapshots))
    )
    sigma_n2 = noise_variance_for_snr(snr_db, sources.power)
    noise = math.sqrt(sigma_n2 / 2.0) * (
        rng.standard_normal((pts.shape[0], n_snapshots))
        + 1j * rng.standard_normal((pts.shape[0], n_snapshots))
    )
    return SnapshotMatrix(data=amat @ waveforms + noise, noise_variance=sigma_n2)
