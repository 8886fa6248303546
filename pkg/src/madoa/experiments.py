"""Monte Carlo experiment runners behind the CLI.

Each runner consumes a config object from :mod:`madoa.config`, writes one or
more CSV files plus a JSON metadata sidecar into the configured output
directory, and returns the assembled result for in-process use.

Reproducibility contract: every trial draws from a generator seeded by
``(seed, experiment_tag, sweep_point_index, trial_index)``, and results are
assembled by trial index, so output CSVs are byte-identical across reruns
and across worker counts. The trial seed deliberately excludes the array
family: all families see the same source/noise draws at a given sweep point,
which pairs the Monte Carlo noise in family comparisons. Worker parallelism
is capped by the ``MA_DOA_THREADS`` environment variable (0 or unset picks
the CPU count).
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from ._version import __version__
from .config import (
    CommonConfig,
    PsrConfig,
    RmseAreaConfig,
    RmseSnrConfig,
    SpectrumConfig,
    config_hash,
)
from .crb import crb, q_factor
from .exceptions import ConfigurationError, InfeasibleError
from .geometry import (
    ArrayFamily,
    ArrayLayout,
    build_pma_layout,
    build_sma_layout,
    build_square_lattice,
    build_triangular_lattice,
    build_uca_layout,
    build_ura_layout,
    moment_stats,
)
from .music import SpectrumGrid, SteeringGrid, find_peaks, music_spectrum, sample_covariance, save_spectrum_csv
from .signal import (
    SourceSet,
    direction_cosines,
    noise_variance_for_snr,
    synthesize_snapshots,
)

# Sweep-point tags entering the per-trial seed derivation.
_TAG_SPECTRUM = 1
_TAG_RMSE_SNR = 2
_TAG_PSR = 3
_TAG_RMSE_AREA = 4

# Cosine error assigned to a trial whose peak search under-resolves, and its
# angle-domain counterpart. Dropping such trials instead would bias RMSE low
# exactly where sidelobe ambiguity matters.
FAILED_TRIAL_COSINE_ERROR = 2.0
FAILED_TRIAL_ANGLE_ERROR = 180.0

# Squared-distance ceiling (direction-cosine units) in estimate-to-truth
# matching. Without it, a source whose peak was missed entirely can steal a
# close source's match by marginally lowering the total distance.
MATCH_COST_CAP = 0.2


def resolve_workers() -> int:
    """Worker count from MA_DOA_THREADS (0/unset = number of CPUs)."""
    raw = os.environ.get("MA_DOA_THREADS", "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(
            f"MA_DOA_THREADS must be a non-negative integer, got {raw!r}"
        ) from None
    if value < 0:
        raise ConfigurationError(f"MA_DOA_THREADS must be >= 0, got {value}")
    return value if value > 0 else max(1, os.cpu_count() or 1)


def trial_rng(seed: int, tag: int, point: int, trial: int) -> np.random.Generator:
    """Independent generator for one Monte Carlo trial."""
    return np.random.default_rng(np.random.SeedSequence([seed, tag, point, trial]))


def build_family_layout(
    family: ArrayFamily,
    common: CommonConfig,
    *,
    triangle_side: float | None = None,
    square_side: float | None = None,
) -> ArrayLayout:
    """Instantiate one configured family, optionally rescaling a region."""
    family = ArrayFamily(family)
    if family is ArrayFamily.PMA:
        return build_pma_layout(
            triangle_side if triangle_side is not None else common.triangle_side,
            common.d_min,
            common.n_antennas,
        )
    if family is ArrayFamily.SMA:
        return build_sma_layout(
            square_side if square_side is not None else common.square_side,
            common.d_min,
            common.n_antennas,
        )
    if family is ArrayFamily.UCA:
        return build_uca_layout(common.circle_radius, common.n_antennas)
    if family is ArrayFamily.URA:
        layout = build_ura_layout(common.ura_rows, common.ura_cols, common.ura_pitch)
        if layout.n != common.n_antennas:
            raise ConfigurationError(
                f"ura_rows*ura_cols = {layout.n} does not match n_antennas = {common.n_antennas}"
            )
        return layout
    raise ConfigurationError(f"cannot build a '{family.value}' layout from config")


def _map_ordered(worker, count: int, n_workers: int) -> list:
    """Run ``worker(i)`` for i in range(count), results in index order."""
    if count == 0:
        return []
    if n_workers <= 1 or count == 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(n_workers, count)) as pool:
        return list(pool.map(worker, range(count)))


def mainlobe_area(grid: SpectrumGrid, rel_level: float = 0.5) -> float:
    """Half-power main-lobe footprint around the global peak, in cosine^2 units.

    The lobe is measured on the array's projection gain, recovered from the
    spectrum as ``max(1/P) - 1/P`` (the subspace energy above the fully
    rejected floor): counting grid nodes within 3 dB of the peak of the raw
    pseudo-spectrum would only measure its noise-limited cusp, which
    collapses to a couple of cells for every well-designed array. Counts the
    4-connected component of nodes at or above ``rel_level`` of the peak
    gain that contains the peak.
    """
    if not 0.0 < rel_level < 1.0:
        raise ConfigurationError(f"rel_level must be in (0, 1), got {rel_level}")
    rejection = 1.0 / np.maximum(grid.values, np.finfo(float).tiny)
    gain = rejection.max() - rejection
    i, j = grid.argmax_node()
    mask = gain >= rel_level * gain[i, j]
    labels, _ = ndimage.label(mask)
    cell = grid.step * float(grid.phi_cos_axis[1] - grid.phi_cos_axis[0])
    return float(np.count_nonzero(labels == labels[i, j])) * cell


def match_estimates(estimates: np.ndarray, truths: np.ndarray) -> np.ndarray:
    """Assign estimates to truths by minimal total cosine-plane distance.

    Squared distances are capped at ``MATCH_COST_CAP`` so a hopeless truth
    (no nearby estimate) cannot distort the assignment of the others.
    Returns ``assign`` with ``assign[k]`` = estimate index for truth k.
    """
    cost = ((estimates[:, None, :] - truths[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(np.minimum(cost, MATCH_COST_CAP))
    assign = np.empty(truths.shape[0], dtype=int)
    assign[cols] = rows
    return assign


@dataclass
class SweepResult:
    """Rows of one sweep, already sorted, plus where they were written."""

    experiment: str
    columns: list
    rows: list
    csv_path: Path | None = None
    meta_path: Path | None = None
    meta: dict = field(default_factory=dict)

    def as_dicts(self) -> list:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def column(self, name: str, *, family: str | None = None) -> list:
        idx = self.columns.index(name)
        rows = self.rows
        if family is not None:
            fam_idx = self.columns.index("family")
            rows = [row for row in rows if row[fam_idx] == family]
        return [row[idx] for row in rows]


@dataclass
class SpectrumRunResult:
    grids: dict
    summary: SweepResult
    spectrum_paths: dict


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9g}"


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def _write_meta(path: Path, experiment: str, cfg, extras: dict | None = None) -> dict:
    meta = {
        "experiment": experiment,
        "config_hash": config_hash(cfg),
        "seed": cfg.common.seed,
        "version": f"madoa-{__version__}",
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if extras:
        meta.update(extras)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return meta


def _out_dir(common: CommonConfig) -> Path:
    out = Path(common.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sorted_families(common: CommonConfig) -> list:
    return sorted(common.families, key=lambda fam: fam.value)


def _rmse_and_se(errors: np.ndarray) -> tuple[float, float]:
    """RMSE of an error sample and its Monte Carlo standard error.

    The SE follows from the delta method applied to the mean of squared
    errors; it is what "one Monte Carlo standard error" means in reports.
    """
    sq = errors**2
    rmse = math.sqrt(float(sq.mean()))
    if errors.size < 2 or rmse == 0.0:
        return rmse, 0.0
    se_mean_sq = float(sq.std(ddof=1)) / math.sqrt(sq.size)
    return rmse, se_mean_sq / (2.0 * rmse)


def _sqrt_crb_pair(layout: ArrayLayout, snr_db: float, n_snapshots: int, power: float) -> tuple[float, float]:
    """(sqrt CRB in theta_cos, sqrt CRB in phi_cos); zeros when noiseless."""
    sigma_n2 = noise_variance_for_snr(snr_db, [power])
    if sigma_n2 == 0.0:
        return 0.0, 0.0
    q = q_factor(sigma_n2, n_snapshots, power, layout.n)
    bounds = crb(moment_stats(layout), q)
    return math.sqrt(bounds.crb_theta_cos), math.sqrt(bounds.crb_phi_cos)


# --------------------------------------------------------------------------
# spectrum
# --------------------------------------------------------------------------

def run_spectrum(cfg: SpectrumConfig) -> SpectrumRunResult:
    """One pseudo-spectrum per family at a fixed operating point.

    Writes ``spectrum_<family>.csv`` per family plus ``spectrum_summary.csv``
    with the peak location and half-power main-lobe area of each family.
    All families share the same source/noise draws.
    """
    common = cfg.common
    out = _out_dir(common)
    source = SourceSet.single(cfg.theta_deg, cfg.phi_deg, common.source_power)

    grids: dict = {}
    paths: dict = {}
    summary_rows = []
    for family in _sorted_families(common):
        layout = build_family_layout(family, common)
        snapshots = synthesize_snapshots(
            layout, source, cfg.n_snapshots, cfg.snr_db,
            trial_rng(common.seed, _TAG_SPECTRUM, 0, 0),
        )
        steering = SteeringGrid(layout, common.grid_step)
        spectrum = music_spectrum(
            sample_covariance(snapshots), layout, 1, steering=steering
        )
        peaks = find_peaks(spectrum, 1)
        estimate = peaks.estimates[0]
        area = mainlobe_area(spectrum)
        grids[family.value] = spectrum
        path = out / f"spectrum_{family.value}.csv"
        save_spectrum_csv(spectrum, path)
        paths[family.value] = path
        summary_rows.append(
            (
                family.value,
                estimate.theta_cos,
                estimate.phi_cos,
                estimate.theta_deg,
                estimate.phi_deg,
                area,
            )
        )

    columns = [
        "family", "peak_theta_cos", "peak_phi_cos",
        "peak_theta_deg", "peak_phi_deg", "mainlobe_area_cos2",
    ]
    summary_rows.sort(key=lambda row: row[0])
    csv_path = out / "spectrum_summary.csv"
    _write_csv(csv_path, columns, summary_rows)
    meta_path = out / "spectrum.meta.json"
    meta = _write_meta(meta_path, "spectrum", cfg)
    summary = SweepResult("spectrum", columns, summary_rows, csv_path, meta_path, meta)
    return SpectrumRunResult(grids=grids, summary=summary, spectrum_paths=paths)


# --------------------------------------------------------------------------
# rmse vs snr
# --------------------------------------------------------------------------

def _single_source_trial(layout, steering, source, n_snapshots, snr_db, rng,
                         truth_cos, truth_deg):
    """(theta_cos err, phi_cos err, theta_deg err, phi_deg err, failed)."""
    snapshots = synthesize_snapshots(layout, source, n_snapshots, snr_db, rng)
    spectrum = music_spectrum(
        sample_covariance(snapshots), layout, 1, steering=steering
    )
    peaks = find_peaks(spectrum, 1)
    if not peaks.estimates:
        return (
            FAILED_TRIAL_COSINE_ERROR, FAILED_TRIAL_COSINE_ERROR,
            FAILED_TRIAL_ANGLE_ERROR, FAILED_TRIAL_ANGLE_ERROR, True,
        )
    est = peaks.estimates[0]
    return (
        est.theta_cos - truth_cos[0],
        est.phi_cos - truth_cos[1],
        est.theta_deg - truth_deg[0],
        est.phi_deg - truth_deg[1],
        False,
    )


_RMSE_COLUMNS = [
    "family",
    "rmse_theta_cos", "rmse_phi_cos",
    "se_theta_cos", "se_phi_cos",
    "sqrt_crb_theta_cos", "sqrt_crb_phi_cos",
    "rmse_theta_deg", "rmse_phi_deg",
    "n_trials", "n_under_resolved",
]


def _rmse_metrics_row(trial_results) -> list:
    arr = np.array([t[:4] for t in trial_results], dtype=float)
    failed = sum(1 for t in trial_results if t[4])
    rmse_tc, se_tc = _rmse_and_se(arr[:, 0])
    rmse_pc, se_pc = _rmse_and_se(arr[:, 1])
    rmse_td, _ = _rmse_and_se(arr[:, 2])
    rmse_pd, _ = _rmse_and_se(arr[:, 3])
    return [rmse_tc, rmse_pc, se_tc, se_pc, rmse_td, rmse_pd, len(trial_results), failed]


def run_rmse_vs_snr(cfg: RmseSnrConfig) -> SweepResult:
    """RMSE of both direction cosines versus SNR, against the square-root bound."""
    common = cfg.common
    out = _out_dir(common)
    workers = resolve_workers()
    source = SourceSet.single(cfg.theta_deg, cfg.phi_deg, common.source_power)
    truth_cos = direction_cosines(cfg.theta_deg, cfg.phi_deg)
    truth_deg = (cfg.theta_deg, cfg.phi_deg)

    rows = []
    for family in _sorted_families(common):
        layout = build_family_layout(family, common)
        steering = SteeringGrid(layout, common.grid_step)
        for point, snr_db in enumerate(cfg.snr_db):
            def one_trial(trial, _snr=snr_db, _point=point):
                rng = trial_rng(common.seed, _TAG_RMSE_SNR, _point, trial)
                return _single_source_trial(
                    layout, steering, source, cfg.n_snapshots, _snr, rng,
                    truth_cos, truth_deg,
                )

            results = _map_ordered(one_trial, cfg.trials, workers)
            metrics = _rmse_metrics_row(results)
            sqrt_tc, sqrt_pc = _sqrt_crb_pair(layout, snr_db, cfg.n_snapshots, common.source_power)
            rows.append(
                (snr_db, family.value, *metrics[:4], sqrt_tc, sqrt_pc, *metrics[4:])
            )

    rows.sort(key=lambda row: (row[0], row[1]))
    columns = ["snr_db"] + _RMSE_COLUMNS
    csv_path = out / "rmse_vs_snr.csv"
    _write_csv(csv_path, columns, rows)
    meta_path = out / "rmse_vs_snr.meta.json"
    meta = _write_meta(meta_path, "rmse_vs_snr", cfg)
    return SweepResult("rmse_vs_snr", columns, rows, csv_path, meta_path, meta)


# --------------------------------------------------------------------------
# psr vs separation
# --------------------------------------------------------------------------

def _psr_sources(cfg: PsrConfig, separation: float) -> SourceSet:
    theta = [cfg.far_theta_deg, cfg.near_theta_deg, cfg.near_theta_deg]
    phi = [cfg.far_phi_deg, cfg.near_phi_deg, cfg.near_phi_deg]
    if cfg.sweep == "theta":
        theta[2] += separation
    else:
        phi[2] += separation
    power = [cfg.common.source_power] * 3
    return SourceSet(np.array(theta), np.array(phi), np.array(power))


def _psr_trial(layout, steering, sources, n_snapshots, snr_db, rng,
               truth_cos, sweep: str, separation: float):
    """(resolved both near sources, under_resolved)."""
    snapshots = synthesize_snapshots(layout, sources, n_snapshots, snr_db, rng)
    spectrum = music_spectrum(
        sample_covariance(snapshots), layout, sources.n_sources, steering=steering
    )
    peaks = find_peaks(spectrum, sources.n_sources)
    if peaks.under_resolved:
        return False, True
    est_cos = np.array([[e.theta_cos, e.phi_cos] for e in peaks.estimates])
    assign = match_estimates(est_cos, truth_cos)
    half = separation / 2.0
    for k in (1, 2):  # the two closely spaced sources
        est = peaks.estimates[assign[k]]
        if sweep == "theta":
            err = est.theta_deg - sources.theta_deg[k]
        else:
            err = est.phi_deg - sources.phi_deg[k]
        if not abs(err) < half:
            return False, False
    return True, False


def run_psr_vs_separation(cfg: PsrConfig) -> SweepResult:
    """Probability of resolving two closely spaced sources versus separation.

    A trial succeeds when both near sources are estimated within half the
    swept separation in the swept angle; under-resolved trials fail.
    """
    common = cfg.common
    out = _out_dir(common)
    workers = resolve_workers()

    rows = []
    for family in _sorted_families(common):
        layout = build_family_layout(family, common)
        steering = SteeringGrid(layout, common.grid_step)
        for point, separation in enumerate(cfg.separations_deg):
            sources = _psr_sources(cfg, separation)
            truth_cos = sources.direction_cosines()

            def one_trial(trial, _point=point, _sources=sources,
                          _truth=truth_cos, _sep=separation):
                rng = trial_rng(common.seed, _TAG_PSR, _point, trial)
                return _psr_trial(
                    layout, steering, _sources, cfg.n_snapshots, cfg.snr_db,
                    rng, _truth, cfg.sweep, _sep,
                )

            results = _map_ordered(one_trial, cfg.trials, workers)
            successes = sum(1 for ok, _ in results if ok)
            failed = sum(1 for _, under in results if under)
            psr = successes / cfg.trials
            se = math.sqrt(psr * (1.0 - psr) / cfg.trials)
            rows.append((separation, family.value, psr, se, cfg.trials, failed))

    rows.sort(key=lambda row: (row[0], row[1]))
    columns = [
        "separation_deg", "family", "psr", "se_psr", "n_trials", "n_under_resolved",
    ]
    csv_path = out / "psr_vs_separation.csv"
    _write_csv(csv_path, columns, rows)
    meta_path = out / "psr_vs_separation.meta.json"
    meta = _write_meta(
        meta_path, "psr_vs_separation", cfg, extras={"sweep": cfg.sweep}
    )
    return SweepResult("psr_vs_separation", columns, rows, csv_path, meta_path, meta)


# --------------------------------------------------------------------------
# rmse vs region area
# --------------------------------------------------------------------------

def snap_triangle_side(area: float, d_min: float) -> float:
    """Largest triangle side not exceeding the target area's side, as an
    integer multiple of ``d_min``."""
    side_exact = math.sqrt(4.0 * area / math.sqrt(3.0))
    m = int(math.floor(side_exact / d_min + 1e-9))
    if m < 1:
        raise InfeasibleError(
            f"area {area} is too small for a lattice with d_min={d_min}"
        )
    return m * d_min


def _area_point_layout(family: ArrayFamily, common: CommonConfig, area: float):
    """(layout or None, actual region area, region size) for one sweep point."""
    if family is ArrayFamily.PMA:
        side = snap_triangle_side(area, common.d_min)
        lattice_size = build_triangular_lattice(side, common.d_min).shape[0]
        if lattice_size < common.n_antennas:
            return None, math.nan, side
        return build_family_layout(family, common, triangle_side=side), \
            math.sqrt(3.0) / 4.0 * side**2, side
    if family is ArrayFamily.SMA:
        side = math.sqrt(area)
        lattice_size = build_square_lattice(side, common.d_min).shape[0]
        if lattice_size < common.n_antennas:
            return None, math.nan, side
        return build_family_layout(family, common, square_side=side), area, side
    layout = build_family_layout(family, common)
    return layout, layout.region.area if layout.region.size else math.nan, \
        layout.region.size if layout.region.size else math.nan


def run_rmse_vs_area(cfg: RmseAreaConfig) -> SweepResult:
    """RMSE versus movable-region area; fixed baselines stay constant.

    Triangle sides snap down to integer multiples of ``d_min`` (actual areas
    are reported); points whose snapped lattice holds fewer candidates than
    antennas are emitted as ``skipped`` rows.
    """
    common = cfg.common
    out = _out_dir(common)
    workers = resolve_workers()
    source = SourceSet.single(cfg.theta_deg, cfg.phi_deg, common.source_power)
    truth_cos = direction_cosines(cfg.theta_deg, cfg.phi_deg)
    truth_deg = (cfg.theta_deg, cfg.phi_deg)

    rows = []
    snapped = []
    for family in _sorted_families(common):
        for point, area in enumerate(cfg.areas):
            layout, area_actual, region_size = _area_point_layout(family, common, area)
            if layout is None:
                rows.append(
                    (area, area_actual, region_size, family.value, "skipped",
                     *(math.nan,) * 8, 0, 0)
                )
                snapped.append(
                    {"family": family.value, "area_nominal": area, "status": "skipped"}
                )
                continue
            steering = SteeringGrid(layout, common.grid_step)

            def one_trial(trial, _point=point, _layout=layout, _steering=steering):
                rng = trial_rng(common.seed, _TAG_RMSE_AREA, _point, trial)
                return _single_source_trial(
                    _layout, _steering, source, cfg.n_snapshots, cfg.snr_db,
                    rng, truth_cos, truth_deg,
                )

            results = _map_ordered(one_trial, cfg.trials, workers)
            metrics = _rmse_metrics_row(results)
            sqrt_tc, sqrt_pc = _sqrt_crb_pair(
                layout, cfg.snr_db, cfg.n_snapshots, common.source_power
            )
            rows.append(
                (area, area_actual, region_size, family.value, "ok",
                 *metrics[:4], sqrt_tc, sqrt_pc, *metrics[4:])
            )
            snapped.append(
                {
                    "family": family.value,
                    "area_nominal": area,
                    "area_actual": area_actual,
                    "region_size": region_size,
                    "status": "ok",
                }
            )

    rows.sort(key=lambda row: (row[0], row[3]))
    columns = (
        ["area_nominal", "area_actual", "region_size", "family", "status"]
        + _RMSE_COLUMNS[1:]
    )
    csv_path = out / "rmse_vs_area.csv"
    _write_csv(csv_path, columns, rows)
    meta_path = out / "rmse_vs_area.meta.json"
    meta = _write_meta(meta_path, "rmse_vs_area", cfg, extras={"region_points": snapped})
    return SweepResult("rmse_vs_area", columns, rows, csv_path, meta_path, meta)
