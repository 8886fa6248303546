"""Closed-form estimation bounds in the direction-cosine domain.

For a planar array whose coordinates (in wavelengths) have sample moments
var(x), var(y), cov(x, y), the variance of any unbiased estimate of the
direction cosines is bounded by

    crb_theta_cos = q / (var_x - cov_xy**2 / var_y)
    crb_phi_cos   = q / (var_y - cov_xy**2 / var_x)

with the scalar ``q = sigma_n^2 / (8 * pi^2 * T * sigma_s^2 * N)``. Lengths
are already normalised by the wavelength, so the bound is dimensionless.

The geometry figure of merit maximised by the layout design is
``var_x + var_y - cov_xy**2/var_x - cov_xy**2/var_y``; for layouts whose
coordinate means and cross moment vanish it reduces to the mean squared
distance from the array centroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import SingularGeometryError
from .geometry import MomentStats
from .validation import check_count, check_positive


@dataclass(frozen=True)
class CrbResult:
    """Lower bounds on the two direction-cosine variances, plus the scale q."""

    crb_theta_cos: float
    crb_phi_cos: float
    q_factor: float


def q_factor(noise_var: float, snapshots: int, source_power: float, n_antennas: int) -> float:
    """Scalar scale of the bound: sigma_n^2 / (8 pi^2 T sigma_s^2 N)."""
    check_positive(noise_var, "noise_var")
    snapshots = check_count(snapshots, "snapshots")
    check_positive(source_power, "source_power")
    n_antennas = check_count(n_antennas, "n_antennas")
    return noise_var / (8.0 * math.pi**2 * snapshots * source_power * n_antennas)


def crb(stats: MomentStats, q: float) -> CrbResult:
    """Evaluate both direction-cosine bounds from layout moments.

    Raises :class:`SingularGeometryError` when the geometry cannot resolve
    both cosines (zero variance or perfectly correlated coordinates), naming
    the denominator that collapsed.
    """
    check_positive(q, "q")
    if stats.var_x <= 0.0:
        raise SingularGeometryError("var_x is zero: all antennas share one x coordinate")
    if stats.var_y <= 0.0:
        raise SingularGeometryError("var_y is zero: all antennas share one y coordinate")
    denom_theta = stats.var_x - stats.cov_xy**2 / stats.var_y
    denom_phi = stats.var_y - stats.cov_xy**2 / stats.var_x
    if denom_theta <= 0.0:
        raise SingularGeometryError(
            f"collinear geometry: var_x - cov^2/var_y = {denom_theta:.3g} <= 0"
        )
    if denom_phi <= 0.0:
        raise SingularGeometryError(
            f"collinear geometry: var_y - cov^2/var_x = {denom_phi:.3g} <= 0"
        )
    return CrbResult(
        crb_theta_cos=q / denom_theta,
        crb_phi_cos=q / denom_phi,
        q_factor=q,
    )


def shape_position_objective(stats: MomentStats) -> float:
    """Geometry figure of merit maximised by the layout design.

    Equals ``mean_rho2`` whenever mean_x = mean_y = mean_xy = 0, which the
    triangular-region layouts satisfy for antenna counts divisible by three.
    """
    if stats.var_x <= 0.0 or stats.var_y <= 0.0:
        raise SingularGeometryError(
            "objective undefined for degenerate geometry (zero coordinate variance)"
        )
    return (
        stats.var_x
        + stats.var_y
        - stats.cov_xy**2 / stats.var_x
        - stats.cov_xy**2 / stats.var_y
    )
