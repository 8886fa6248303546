"""Input validation helpers shared by the public API.

These mirror the role of ``sklearn.utils.validation``: normalise user input
to the internal representation and fail early with a precise message.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError


def check_positions(positions, *, name: str = "positions") -> np.ndarray:
    """Coerce to a finite float array of shape (n, 2).

    Accepts anything array-like, including an ``ArrayLayout`` (via its
    ``positions`` attribute) or a list of (x, y) pairs.
    """
    if hasattr(positions, "positions"):
        positions = positions.positions
    arr = np.asarray(positions, dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ConfigurationError(
            f"{name} must have shape (n, 2), got {arr.shape}"
        )
    if arr.shape[0] < 1:
        raise ConfigurationError(f"{name} must contain at least one point")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return arr


def check_snapshots(data, *, n_antennas: int | None = None) -> np.ndarray:
    """Coerce to a complex (n_antennas, n_snapshots) matrix.

    Accepts a ``SnapshotMatrix`` (via its ``data`` attribute) or a bare array.
    """
    if hasattr(data, "data"):
        data = data.data
    arr = np.asarray(data, dtype=complex)
    if arr.ndim != 2:
        raise ConfigurationError(
            f"snapshot matrix must be 2-D (antennas x snapshots), got ndim={arr.ndim}"
        )
    if arr.shape[1] < 1:
        raise ConfigurationError("snapshot matrix needs at least one snapshot")
    if n_antennas is not None and arr.shape[0] != n_antennas:
        raise ConfigurationError(
            f"snapshot matrix has {arr.shape[0]} rows, expected {n_antennas} antennas"
        )
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError("snapshot matrix contains non-finite values")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
    return value


def check_count(value, name: str, *, minimum: int = 1) -> int:
    if not float(value).is_integer():
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value}")
    return value
