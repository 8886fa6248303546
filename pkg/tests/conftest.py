import math

import numpy as np
import pytest


def brute_force_farthest(points, n):
    """Independent full-sort oracle for farthest-from-centroid selection.

    Reimplements the documented ranking (distance desc, angle mod 120 deg
    asc, angle asc, all quantised at 1e-9) with plain Python sorting.
    """
    pts = np.asarray(points, dtype=float)
    centroid = pts.mean(axis=0)
    quant = 1e-9
    two_thirds = 2.0 * math.pi / 3.0
    full_turn = round(2.0 * math.pi / quant)
    third_turn = round(two_thirds / quant)
    entries = []
    for idx in range(pts.shape[0]):
        dx = pts[idx, 0] - centroid[0]
        dy = pts[idx, 1] - centroid[1]
        dist_q = round(math.hypot(dx, dy) / quant)
        ang = math.atan2(dy, dx) % (2.0 * math.pi)
        ang_q = round(ang / quant)
        if ang_q >= full_turn:
            ang_q = 0
        orbit_q = round((ang % two_thirds) / quant)
        if orbit_q >= third_turn:
            orbit_q = 0
        entries.append((-dist_q, orbit_q, ang_q, idx))
    entries.sort()
    return pts[[e[3] for e in entries[:n]]]


@pytest.fixture
def selection_oracle():
    return brute_force_farthest
