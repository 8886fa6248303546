"""Movable-antenna array design and 2D direction-of-arrival estimation.

The package covers four pieces that compose into a reproducible experiment
suite:

* :mod:`madoa.geometry` - antenna layouts: a movable array designed on an
  equilateral triangular region by farthest-from-centroid selection over a
  triangular lattice, plus square-region, circular and rectangular baselines.
* :mod:`madoa.signal` - direction cosines, steering vectors, and synthetic
  snapshot matrices.
* :mod:`madoa.crb` - closed-form variance bounds on the direction cosines
  from layout moments, and the geometry objective the design maximises.
* :mod:`madoa.music` - 2D MUSIC over a direction-cosine grid, exposed both
  as plain functions and as the scikit-learn style :class:`~madoa.Music2D`.
* :mod:`madoa.experiments` / :mod:`madoa.cli` - config-driven Monte Carlo
  sweeps with seed-deterministic CSV outputs.
"""

from ._version import __version__
from .exceptions import (
    ConfigurationError,
    InfeasibleError,
    InvalidDirectionError,
    MadoaError,
    NonHermitianError,
    SingularGeometryError,
    SubspaceError,
)
from .geometry import (
    GEOMETRIC_TOLERANCE,
    ArrayFamily,
    ArrayLayout,
    DiskUnionEstimate,
    MomentStats,
    RegionShape,
    RegionSpec,
    SpacingReport,
    build_pma_layout,
    build_sma_layout,
    build_square_lattice,
    build_triangular_lattice,
    build_uca_layout,
    build_ura_layout,
    disk_union_area,
    load_layout_csv,
    moment_stats,
    save_layout_csv,
    select_farthest_from_centroid,
    validate_min_spacing,
)
from .signal import (
    SnapshotMatrix,
    SourceSet,
    direction_cosines,
    inverse_direction_cosines,
    noise_variance_for_snr,
    steering_matrix,
    steering_vector,
    synthesize_snapshots,
)
from .crb import CrbResult, crb, q_factor, shape_position_objective
from .music import (
    DoaEstimate,
    Music2D,
    PeakSearchResult,
    SpectrumGrid,
    SteeringGrid,
    find_peaks,
    grid_axis,
    hermitian_eig,
    music_spectrum,
    sample_covariance,
    save_spectrum_csv,
)
from .config import (
    CommonConfig,
    PsrConfig,
    RmseAreaConfig,
    RmseSnrConfig,
    SpectrumConfig,
    config_hash,
    load_raw_config,
    paper_defaults_path,
    psr_config,
    rmse_area_config,
    rmse_snr_config,
    spectrum_config,
)
from .experiments import (
    SpectrumRunResult,
    SweepResult,
    build_family_layout,
    mainlobe_area,
    match_estimates,
    resolve_workers,
    run_psr_vs_separation,
    run_rmse_vs_area,
    run_rmse_vs_snr,
    run_spectrum,
    snap_triangle_side,
    trial_rng,
)

__all__ = [
    "__version__",
    # exceptions
    "MadoaError", "ConfigurationError", "InfeasibleError", "SingularGeometryError",
    "InvalidDirectionError", "SubspaceError", "NonHermitianError",
    # geometry
    "GEOMETRIC_TOLERANCE", "ArrayFamily", "ArrayLayout", "RegionShape", "RegionSpec",
    "MomentStats", "SpacingReport", "DiskUnionEstimate",
    "build_triangular_lattice", "build_square_lattice", "select_farthest_from_centroid",
    "build_pma_layout", "build_sma_layout", "build_uca_layout", "build_ura_layout",
    "moment_stats", "validate_min_spacing", "disk_union_area",
    "save_layout_csv", "load_layout_csv",
    # signal
    "SourceSet", "SnapshotMatrix", "direction_cosines", "inverse_direction_cosines",
    "steering_vector", "steering_matrix", "synthesize_snapshots", "noise_variance_for_snr",
    # crb
    "CrbResult", "q_factor", "crb", "shape_position_objective",
    # music
    "SpectrumGrid", "SteeringGrid", "DoaEstimate", "PeakSearchResult", "Music2D",
    "sample_covariance", "hermitian_eig", "music_spectrum", "find_peaks",
    "save_spectrum_csv", "grid_axis",
    # config
    "CommonConfig", "SpectrumConfig", "RmseSnrConfig", "PsrConfig", "RmseAreaConfig",
    "load_raw_config", "spectrum_config", "rmse_snr_config", "psr_config",
    "rmse_area_config", "paper_defaults_path", "config_hash",
    # experiments
    "SweepResult", "SpectrumRunResult", "run_spectrum", "run_rmse_vs_snr",
    "run_psr_vs_separation", "run_rmse_vs_area", "build_family_layout",
    "mainlobe_area", "match_estimates", "resolve_workers", "trial_rng",
    "snap_triangle_side",
]
