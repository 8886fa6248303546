"""Antenna-array layouts on a plane, in wavelength units.

Provides the movable-antenna layout built from a triangular candidate
lattice with farthest-from-centroid selection, three fixed baselines
(square-region movable array, uniform circular array, uniform rectangular
array), coordinate moment statistics, spacing diagnostics, and a Monte
Carlo disk-union area estimator used to study the dense-packing property
of equilateral point triples.

All coordinates are expressed in carrier wavelengths, so the rest of the
package never needs a physical wavelength value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import ConfigurationError, InfeasibleError
from .validation import check_count, check_positions, check_positive

# Absolute tolerance for geometric comparisons (lengths in wavelengths).
GEOMETRIC_TOLERANCE = 1e-9

_TWO_THIRDS_PI = 2.0 * math.pi / 3.0


class ArrayFamily(str, Enum):
    """Layout families understood by the experiment harness."""

    PMA = "pma"    # proposed movable array: triangular region, farthest selection
    SMA = "sma"    # square-region movable array, same selection rule
    UCA = "uca"    # uniform circular array (fixed baseline)
    URA = "ura"    # uniform rectangular array (fixed baseline)
    CUSTOM = "custom"


class RegionShape(str, Enum):
    EQUILATERAL_TRIANGLE = "equilateral_triangle"
    SQUARE = "square"
    CIRCLE = "circle"
    NONE = "none"


@dataclass(frozen=True)
class RegionSpec:
    """Planar movable region centred on the origin.

    ``size`` is the side length for triangle/square regions and the radius
    for circles; it is ignored for ``RegionShape.NONE``.
    """

    shape: RegionShape = RegionShape.NONE
    size: float = 0.0

    def __post_init__(self) -> None:
        if self.shape is not RegionShape.NONE:
            check_positive(self.size, "region size")

    @property
    def area(self) -> float:
        """Region area in squared wavelengths (0 for an unbounded region)."""
        if self.shape is RegionShape.EQUILATERAL_TRIANGLE:
            return math.sqrt(3.0) / 4.0 * self.size**2
        if self.shape is RegionShape.SQUARE:
            return self.size**2
        if self.shape is RegionShape.CIRCLE:
            return math.pi * self.size**2
        return 0.0

    def contains(self, positions, tol: float = GEOMETRIC_TOLERANCE) -> bool:
        """True if every point lies inside the region (within ``tol``)."""
        pts = check_positions(positions)
        if self.shape is RegionShape.NONE:
            return True
        x, y = pts[:, 0], pts[:, 1]
        if self.shape is RegionShape.SQUARE:
            half = self.size / 2.0
            return bool(np.all(np.abs(x) <= half + tol) and np.all(np.abs(y) <= half + tol))
        if self.shape is RegionShape.CIRCLE:
            return bool(np.all(np.hypot(x, y) <= self.size + tol))
        # Equilateral triangle, apex up, centroid at the origin.
        s = self.size
        apex = np.array([0.0, s / math.sqrt(3.0)])
        base_l = np.array([-s / 2.0, -s / (2.0 * math.sqrt(3.0))])
        base_r = np.array([s / 2.0, -s / (2.0 * math.sqrt(3.0))])
        for a, b in ((apex, base_l), (base_l, base_r), (base_r, apex)):
            edge = b - a
            normal = np.array([-edge[1], edge[0]]) / np.hypot(*edge)  # inward for CCW order
            signed = (pts - a) @ normal
            if np.any(signed < -tol):
                return False
        return True


@dataclass(frozen=True)
class ArrayLayout:
    """Immutable antenna layout plus provenance metadata.

    Invariants checked at construction: finite coordinates, pairwise
    distances >= ``d_min`` − tolerance, and containment in ``region`` when
    one is given. ``positions`` is locked read-only so layouts can be
    shared freely across threads.
    """

    positions: np.ndarray
    family: ArrayFamily = ArrayFamily.CUSTOM
    region: RegionSpec = RegionSpec()
    d_min: float = 0.0

    def __post_init__(self) -> None:
        pts = check_positions(self.positions).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "positions", pts)
        object.__setattr__(self, "family", ArrayFamily(self.family))
        if self.d_min < 0:
            raise ConfigurationError(f"d_min must be >= 0, got {self.d_min}")
        if self.d_min > 0:
            report = validate_min_spacing(self)
            if not report.ok:
                i, j, dist = report.violations[0]
                raise ConfigurationError(
                    f"antennas {i} and {j} are {dist:.6g} wavelengths apart, "
                    f"closer than d_min={self.d_min}"
                )
        if not self.region.contains(pts):
            raise ConfigurationError(
                f"layout extends outside its {self.region.shape.value} region"
            )

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.positions[:, 1]


@dataclass(frozen=True)
class MomentStats:
    """Sample coordinate moments of a layout (divisor n, not n−1)."""

    mean_x: float
    mean_y: float
    mean_x2: float
    mean_y2: float
    mean_xy: float
    var_x: float
    var_y: float
    cov_xy: float
    mean_rho2: float


class SpacingReport(NamedTuple):
    ok: bool
    violations: list  # (index_i, index_j, distance) triples


class DiskUnionEstimate(NamedTuple):
    area: float
    stderr: float


def _pairwise_distances(pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def build_triangular_lattice(side: float, d_min: float) -> np.ndarray:
    """Triangular candidate lattice for an equilateral region of side ``side``.

    The side must be an integer multiple m of ``d_min``. Rows of 1, 2, ..., m
    points are stacked with in-row pitch ``d_min`` and row pitch
    ``d_min * sqrt(3)/2``, giving m(m+1)/2 candidates, and the whole lattice
    is translated so its centroid sits at the origin.

    Returns
    -------
    ndarray of shape (m(m+1)/2, 2)
    """
    check_positive(side, "side")
    check_positive(d_min, "d_min")
    ratio = side / d_min
    m = int(round(ratio))
    if m < 1:
        raise ConfigurationError(
            f"side={side} and d_min={d_min} give zero lattice rows"
        )
    if abs(ratio - m) > GEOMETRIC_TOLERANCE:
        raise ConfigurationError(
            f"side/d_min must be an integer, got {ratio!r}"
        )
    row_pitch = d_min * math.sqrt(3.0) / 2.0
    pts = [
        ((i - j / 2.0) * d_min, -j * row_pitch)
        for j in range(m)
        for i in range(j + 1)
    ]
    arr = np.array(pts, dtype=float)
    return arr - arr.mean(axis=0)


def build_square_lattice(side: float, d_min: float) -> np.ndarray:
    """Square candidate lattice with pitch ``d_min``, centred at the origin.

    Uses the largest k x k grid whose span (k−1)*d_min fits in ``side``.
    """
    check_positive(side, "side")
    check_positive(d_min, "d_min")
    per_side = int(math.floor(side / d_min + GEOMETRIC_TOLERANCE)) + 1
    axis = (np.arange(per_side) - (per_side - 1) / 2.0) * d_min
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _selection_order(pts: np.ndarray, quant: float = GEOMETRIC_TOLERANCE) -> np.ndarray:
    """Deterministic ranking used by farthest-from-centroid selection.

    Sort key: distance to the candidate centroid descending, then polar
    angle modulo 120 degrees ascending, then polar angle ascending. The
    middle key keeps the three members of any 120-degree rotation orbit
    adjacent, so a prefix whose length is a multiple of three takes whole
    orbits even when two distinct orbits share one radius. Distances and
    angles are quantised at ``quant`` before comparison so that
    floating-point noise cannot reorder exact ties.
    """
    centroid = pts.mean(axis=0)
    rel = pts - centroid
    dist = np.hypot(rel[:, 0], rel[:, 1])
    angle = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2.0 * math.pi)

    dist_q = np.round(dist / quant).astype(np.int64)
    angle_q = np.round(angle / quant).astype(np.int64)
    full_turn = round(2.0 * math.pi / quant)
    angle_q[angle_q >= full_turn] = 0

    orbit_angle = np.mod(angle, _TWO_THIRDS_PI)
    orbit_q = np.round(orbit_angle / quant).astype(np.int64)
    third_turn = round(_TWO_THIRDS_PI / quant)
    orbit_q[orbit_q >= third_turn] = 0

    # np.lexsort sorts by the last key first.
    return np.lexsort((angle_q, orbit_q, -dist_q))


def select_farthest_from_centroid(
    candidates,
    n_antennas: int,
    *,
    family: ArrayFamily = ArrayFamily.CUSTOM,
    region: RegionSpec = RegionSpec(),
    d_min: float = 0.0,
) -> ArrayLayout:
    """Pick the ``n_antennas`` candidates farthest from the candidate centroid.

    Ties are broken deterministically (see :func:`_selection_order`); the
    returned layout lists antennas in ranking order. The keyword arguments
    attach provenance metadata for layouts produced by the family builders.
    """
    pts = check_positions(candidates, name="candidates")
    n_antennas = check_count(n_antennas, "n_antennas")
    if n_antennas > pts.shape[0]:
        raise InfeasibleError(
            f"requested {n_antennas} antennas from {pts.shape[0]} candidates"
        )
    order = _selection_order(pts)
    return ArrayLayout(pts[order[:n_antennas]], family=family, region=region, d_min=d_min)


def build_pma_layout(side: float, d_min: float, n_antennas: int) -> ArrayLayout:
    """Movable-antenna layout on an equilateral triangular region.

    Builds the triangular candidate lattice and keeps the ``n_antennas``
    candidates farthest from the centroid.
    """
    lattice = build_triangular_lattice(side, d_min)
    return select_farthest_from_centroid(
        lattice,
        n_antennas,
        family=ArrayFamily.PMA,
        region=RegionSpec(RegionShape.EQUILATERAL_TRIANGLE, side),
        d_min=d_min,
    )


def build_sma_layout(side: float, d_min: float, n_antennas: int) -> ArrayLayout:
    """Movable-antenna layout on a square region (baseline).

    Mirrors the triangular-region procedure on a square lattice: pitch
    ``d_min``, farthest-from-centroid selection with the same tie-break.
    The selected set is re-centred so its centroid is the origin.
    """
    lattice = build_square_lattice(side, d_min)
    if n_antennas > lattice.shape[0]:
        raise InfeasibleError(
            f"square lattice of side {side} holds {lattice.shape[0]} candidates, "
            f"fewer than {n_antennas}"
        )
    order = _selection_order(lattice)
    chosen = lattice[order[: check_count(n_antennas, 'n_antennas')]]
    chosen = chosen - chosen.mean(axis=0)
    return ArrayLayout(
        chosen,
        family=ArrayFamily.SMA,
        region=RegionSpec(RegionShape.SQUARE, side),
        d_min=d_min,
    )


def build_uca_layout(radius: float, n_antennas: int) -> ArrayLayout:
    """Uniform circular array of ``n_antennas`` elements, first at angle 0."""
    check_positive(radius, "radius")
    n_antennas = check_count(n_antennas, "n_antennas")
    ang = 2.0 * math.pi * np.arange(n_antennas) / n_antennas
    pts = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return ArrayLayout(
        pts,
        family=ArrayFamily.UCA,
        region=RegionSpec(RegionShape.CIRCLE, radius),
    )


def build_ura_layout(rows: int, cols: int, pitch: float) -> ArrayLayout:
    """Uniform rectangular array centred at the origin."""
    rows = check_count(rows, "rows")
    cols = check_count(cols, "cols")
    check_positive(pitch, "pitch")
    gx = (np.arange(rows) - (rows - 1) / 2.0) * pitch
    gy = (np.arange(cols) - (cols - 1) / 2.0) * pitch
    mx, my = np.meshgrid(gx, gy, indexing="ij")
    pts = np.column_stack([mx.ravel(), my.ravel()])
    return ArrayLayout(pts, family=ArrayFamily.URA)


def moment_stats(layout) -> MomentStats:
    """Coordinate moments feeding the estimation bounds.

    ``var_x`` is computed as ``mean_x2 - mean_x**2`` (same floats as the
    reported means), so that identity holds exactly.
    """
    pts = check_positions(layout)
    x, y = pts[:, 0], pts[:, 1]
    mean_x = float(x.mean())
    mean_y = float(y.mean())
    mean_x2 = float((x**2).mean())
    mean_y2 = float((y**2).mean())
    mean_xy = float((x * y).mean())
    return MomentStats(
        mean_x=mean_x,
        mean_y=mean_y,
        mean_x2=mean_x2,
        mean_y2=mean_y2,
        mean_xy=mean_xy,
        var_x=mean_x2 - mean_x**2,
        var_y=mean_y2 - mean_y**2,
        cov_xy=mean_xy - mean_x * mean_y,
        mean_rho2=mean_x2 + mean_y2,
    )


def validate_min_spacing(layout, d_min: float | None = None) -> SpacingReport:
    """Check all pairwise distances against a minimum spacing.

    ``d_min`` defaults to the layout's own constraint. Returns a report
    rather than raising, so it can be used as a diagnostic.
    """
    pts = check_positions(layout)
    if d_min is None:
        d_min = getattr(layout, "d_min", 0.0)
    dist = _pairwise_distances(pts)
    n = pts.shape[0]
    violations = [
        (i, j, float(dist[i, j]))
        for i in range(n)
        for j in range(i + 1, n)
        if dist[i, j] < d_min - GEOMETRIC_TOLERANCE
    ]
    return SpacingReport(ok=not violations, violations=violations)


def disk_union_area(
    centers,
    radius: float,
    samples: int,
    seed: int,
) -> DiskUnionEstimate:
    """Monte Carlo estimate of the area covered by equal-radius disks.

    Samples uniformly over the bounding box of the disks; the result is an
    unbiased estimate of the union area with a binomial standard error.
    Deterministic for a fixed ``seed``.
    """
    pts = check_positions(centers, name="centers")
    check_positive(radius, "radius")
    samples = check_count(samples, "samples", minimum=10_000)
    lo = pts.min(axis=0) - radius
    hi = pts.max(axis=0) + radius
    box_area = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    draws = rng.uniform(lo, hi, size=(samples, 2))
    diff = draws[:, None, :] - pts[None, :, :]
    inside = (np.einsum("spc,spc->sp", diff, diff) <= radius**2).any(axis=1)
    p_hat = inside.mean()
    return DiskUnionEstimate(
        area=box_area * float(p_hat),
        stderr=box_area * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / samples),
    )


def save_layout_csv(layout, path_or_file) -> None:
    """Write antenna coordinates as CSV (header x_lambda,y_lambda, 12 sig. digits).

    Accepts a filesystem path or an open text stream.
    """
    pts = check_positions(layout)

    def _write(fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(["x_lambda", "y_lambda"])
        for x, y in pts:
            writer.writerow([f"{x:.12g}", f"{y:.12g}"])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def load_layout_csv(path) -> ArrayLayout:
    """Read a layout CSV produced by :func:`save_layout_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x_lambda", "y_lambda"]:
            raise ConfigurationError(
                f"unexpected layout CSV header {header!r} in {path}"
            )
        try:
            pts = [(float(row[0]), float(row[1])) for row in reader if row]
        except (IndexError, ValueError) as exc:
            raise ConfigurationError(f"malformed layout CSV {path}: {exc}") from exc
    if not pts:
        raise ConfigurationError(f"layout CSV {path} contains no antennas")
    return ArrayLayout(np.array(pts), family=ArrayFamily.CUSTOM)
