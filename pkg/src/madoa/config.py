"""Declarative experiment configuration.

Experiments are described by a TOML file with a ``[common]`` section (array
sizes, region dimensions, grid, seed, output directory) and one section per
experiment (``[spectrum]``, ``[rmse_snr]``, ``[psr]``, ``[rmse_area]``).
Unknown sections or keys are errors, so typos fail loudly. A packaged
default file encodes the standard comparison suite; CLI flags can override
trials, seed, SNR, family subset and output directory without editing it.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path

from .exceptions import ConfigurationError
from .geometry import ArrayFamily

try:  # Python >= 3.11
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as _toml

_SECTIONS = ("common", "spectrum", "rmse_snr", "psr", "rmse_area")
_SWEEPABLE_ANGLES = ("theta", "phi")


@dataclass(frozen=True)
class CommonConfig:
    n_antennas: int
    d_min: float
    families: tuple
    triangle_side: float
    square_side: float
    circle_radius: float
    ura_rows: int
    ura_cols: int
    ura_pitch: float
    grid_step: float
    seed: int
    out_dir: str
    source_power: float


@dataclass(frozen=True)
class SpectrumConfig:
    common: CommonConfig
    snr_db: float
    n_snapshots: int
    theta_deg: float
    phi_deg: float


@dataclass(frozen=True)
class RmseSnrConfig:
    common: CommonConfig
    snr_db: tuple
    n_snapshots: int
    trials: int
    theta_deg: float
    phi_deg: float


@dataclass(frozen=True)
class PsrConfig:
    common: CommonConfig
    snr_db: float
    n_snapshots: int
    trials: int
    sweep: str
    separations_deg: tuple
    far_theta_deg: float
    far_phi_deg: float
    near_theta_deg: float
    near_phi_deg: float


@dataclass(frozen=True)
class RmseAreaConfig:
    common: CommonConfig
    snr_db: float
    n_snapshots: int
    trials: int
    areas: tuple
    theta_deg: float
    phi_deg: float


def paper_defaults_path() -> Path:
    """Filesystem path of the packaged default configuration."""
    return Path(resources.files("madoa").joinpath("data/defaults.toml"))


def load_raw_config(path=None) -> dict:
    """Parse and section-validate a TOML config (``None`` = packaged defaults)."""
    cfg_path = paper_defaults_path() if path is None else Path(path)
    if not cfg_path.is_file():
        raise ConfigurationError(f"config file not found: {cfg_path}")
    try:
        raw = _toml.loads(cfg_path.read_text(encoding="utf-8"))
    except _toml.TOMLDecodeError as exc:
        raise ConfigurationError(f"config file {cfg_path} is not valid TOML: {exc}") from exc
    unknown = sorted(set(raw) - set(_SECTIONS))
    if unknown:
        raise ConfigurationError(f"unknown config section(s): {', '.join(unknown)}")
    if "common" not in raw:
        raise ConfigurationError("config is missing the [common] section")
    return raw


def _field(section: dict, section_name: str, key: str):
    if key not in section:
        raise ConfigurationError(f"[{section_name}] is missing required key '{key}'")
    return section[key]


def _check_no_extras(section: dict, section_name: str, allowed) -> None:
    extras = sorted(set(section) - set(allowed))
    if extras:
        raise ConfigurationError(
            f"unknown key(s) in [{section_name}]: {', '.join(extras)}"
        )


def _as_float(value, where: str, *, positive: bool = False, allow_inf: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where} must be a number, got {value!r}")
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise ConfigurationError(f"{where} must be finite, got {value!r}")
    if positive and not value > 0:
        raise ConfigurationError(f"{where} must be positive, got {value!r}")
    return value


def _as_int(value, where: str, *, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{where} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigurationError(f"{where} must be >= {minimum}, got {value}")
    return value


def _as_float_list(value, where: str, *, positive: bool = False, allow_inf: bool = False) -> tuple:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigurationError(f"{where} must be a non-empty list of numbers")
    return tuple(
        _as_float(v, f"{where}[{i}]", positive=positive, allow_inf=allow_inf)
        for i, v in enumerate(value)
    )


def _as_families(value, where: str) -> tuple:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigurationError(f"{where} must be a non-empty list of family names")
    families = []
    for item in value:
        try:
            fam = ArrayFamily(str(item).lower())
        except ValueError:
            raise ConfigurationError(
                f"{where} contains unknown family {item!r}; "
                f"expected a subset of pma, sma, uca, ura"
            ) from None
        if fam is ArrayFamily.CUSTOM:
            raise ConfigurationError(f"{where} cannot include 'custom'")
        if fam in families:
            raise ConfigurationError(f"{where} lists {fam.value!r} twice")
        families.append(fam)
    return tuple(families)


def parse_common(raw: dict) -> CommonConfig:
    section = raw["common"]
    allowed = (
        "n_antennas", "d_min", "families", "triangle_side", "square_side",
        "circle_radius", "ura_rows", "ura_cols", "ura_pitch", "grid_step",
        "seed", "out_dir", "source_power",
    )
    _check_no_extras(section, "common", allowed)
    out_dir = _field(section, "common", "out_dir")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigurationError("[common] out_dir must be a non-empty string")
    return CommonConfig(
        n_antennas=_as_int(_field(section, "common", "n_antennas"), "[common] n_antennas"),
        d_min=_as_float(_field(section, "common", "d_min"), "[common] d_min", positive=True),
        families=_as_families(_field(section, "common", "families"), "[common] families"),
        triangle_side=_as_float(
            _field(section, "common", "triangle_side"), "[common] triangle_side", positive=True
        ),
        square_side=_as_float(
            _field(section, "common", "square_side"), "[common] square_side", positive=True
        ),
        circle_radius=_as_float(
            _field(section, "common", "circle_radius"), "[common] circle_radius", positive=True
        ),
        ura_rows=_as_int(_field(section, "common", "ura_rows"), "[common] ura_rows"),
        ura_cols=_as_int(_field(section, "common", "ura_cols"), "[common] ura_cols"),
        ura_pitch=_as_float(
            _field(section, "common", "ura_pitch"), "[common] ura_pitch", positive=True
        ),
        grid_step=_as_float(
            _field(section, "common", "grid_step"), "[common] grid_step", positive=True
        ),
        seed=_as_int(_field(section, "common", "seed"), "[common] seed", minimum=0),
        out_dir=out_dir,
        source_power=_as_float(
            _field(section, "common", "source_power"), "[common] source_power", positive=True
        ),
    )


def _experiment_section(raw: dict, name: str) -> dict:
    if name not in raw:
        raise ConfigurationError(f"config has no [{name}] section")
    return raw[name]


def _apply_common_overrides(common: CommonConfig, overrides: dict) -> CommonConfig:
    if overrides.get("seed") is not None:
        common = replace(common, seed=_as_int(overrides["seed"], "--seed", minimum=0))
    if overrides.get("out_dir") is not None:
        common = replace(common, out_dir=str(overrides["out_dir"]))
    if overrides.get("families") is not None:
        common = replace(common, families=_as_families(overrides["families"], "--family"))
    return common


def _single_snr_override(overrides: dict, current: float) -> float:
    snr = overrides.get("snr_db")
    if snr is None:
        return current
    values = snr if isinstance(snr, (list, tuple)) else [snr]
    if len(values) != 1:
        raise ConfigurationError("--snr takes a single value for this experiment")
    return _as_float(values[0], "--snr", allow_inf=True)


def _trials_override(overrides: dict, current: int) -> int:
    trials = overrides.get("trials")
    if trials is None:
        return current
    return _as_int(trials, "--trials")


def spectrum_config(raw: dict, **overrides) -> SpectrumConfig:
    section = _experiment_section(raw, "spectrum")
    _check_no_extras(section, "spectrum", ("snr_db", "n_snapshots", "theta_deg", "phi_deg"))
    cfg = SpectrumConfig(
        common=_apply_common_overrides(parse_common(raw), overrides),
        snr_db=_as_float(_field(section, "spectrum", "snr_db"), "[spectrum] snr_db", allow_inf=True),
        n_snapshots=_as_int(_field(section, "spectrum", "n_snapshots"), "[spectrum] n_snapshots"),
        theta_deg=_as_float(_field(section, "spectrum", "theta_deg"), "[spectrum] theta_deg"),
        phi_deg=_as_float(_field(section, "spectrum", "phi_deg"), "[spectrum] phi_deg"),
    )
    return replace(cfg, snr_db=_single_snr_override(overrides, cfg.snr_db))


def rmse_snr_config(raw: dict, **overrides) -> RmseSnrConfig:
    section = _experiment_section(raw, "rmse_snr")
    _check_no_extras(
        section, "rmse_snr", ("snr_db", "n_snapshots", "trials", "theta_deg", "phi_deg")
    )
    cfg = RmseSnrConfig(
        common=_apply_common_overrides(parse_common(raw), overrides),
        snr_db=_as_float_list(_field(section, "rmse_snr", "snr_db"), "[rmse_snr] snr_db", allow_inf=True),
        n_snapshots=_as_int(_field(section, "rmse_snr", "n_snapshots"), "[rmse_snr] n_snapshots"),
        trials=_as_int(_field(section, "rmse_snr", "trials"), "[rmse_snr] trials"),
        theta_deg=_as_float(_field(section, "rmse_snr", "theta_deg"), "[rmse_snr] theta_deg"),
        phi_deg=_as_float(_field(section, "rmse_snr", "phi_deg"), "[rmse_snr] phi_deg"),
    )
    snr = overrides.get("snr_db")
    if snr is not None:
        values = snr if isinstance(snr, (list, tuple)) else [snr]
        cfg = replace(cfg, snr_db=_as_float_list(values, "--snr", allow_inf=True))
    return replace(cfg, trials=_trials_override(overrides, cfg.trials))


def psr_config(raw: dict, **overrides) -> PsrConfig:
    section = _experiment_section(raw, "psr")
    allowed = (
        "snr_db", "n_snapshots", "trials", "sweep", "separations_deg",
        "far_theta_deg", "far_phi_deg", "near_theta_deg", "near_phi_deg",
    )
    _check_no_extras(section, "psr", allowed)
    sweep = _field(section, "psr", "sweep")
    if sweep not in _SWEEPABLE_ANGLES:
        raise ConfigurationError(f"[psr] sweep must be one of {_SWEEPABLE_ANGLES}, got {sweep!r}")
    separations = _as_float_list(_field(section, "psr", "separations_deg"), "[psr] separations_deg")
    if any(s < 0 for s in separations):
        raise ConfigurationError("[psr] separations_deg must be non-negative")
    cfg = PsrConfig(
        common=_apply_common_overrides(parse_common(raw), overrides),
        snr_db=_as_float(_field(section, "psr", "snr_db"), "[psr] snr_db", allow_inf=True),
        n_snapshots=_as_int(_field(section, "psr", "n_snapshots"), "[psr] n_snapshots"),
        trials=_as_int(_field(section, "psr", "trials"), "[psr] trials"),
        sweep=sweep,
        separations_deg=separations,
        far_theta_deg=_as_float(_field(section, "psr", "far_theta_deg"), "[psr] far_theta_deg"),
        far_phi_deg=_as_float(_field(section, "psr", "far_phi_deg"), "[psr] far_phi_deg"),
        near_theta_deg=_as_float(_field(section, "psr", "near_theta_deg"), "[psr] near_theta_deg"),
        near_phi_deg=_as_float(_field(section, "psr", "near_phi_deg"), "[psr] near_phi_deg"),
    )
    cfg = replace(cfg, snr_db=_single_snr_override(overrides, cfg.snr_db))
    return replace(cfg, trials=_trials_override(overrides, cfg.trials))


def rmse_area_config(raw: dict, **overrides) -> RmseAreaConfig:
    section = _experiment_section(raw, "rmse_area")
    _check_no_extras(
        section, "rmse_area", ("snr_db", "n_snapshots", "trials", "areas", "theta_deg", "phi_deg")
    )
    cfg = RmseAreaConfig(
        common=_apply_common_overrides(parse_common(raw), overrides),
        snr_db=_as_float(_field(section, "rmse_area", "snr_db"), "[rmse_area] snr_db", allow_inf=True),
        n_snapshots=_as_int(_field(section, "rmse_area", "n_snapshots"), "[rmse_area] n_snapshots"),
        trials=_as_int(_field(section, "rmse_area", "trials"), "[rmse_area] trials"),
        areas=_as_float_list(_field(section, "rmse_area", "areas"), "[rmse_area] areas", positive=True),
        theta_deg=_as_float(_field(section, "rmse_area", "theta_deg"), "[rmse_area] theta_deg"),
        phi_deg=_as_float(_field(section, "rmse_area", "phi_deg"), "[rmse_area] phi_deg"),
    )
    cfg = replace(cfg, snr_db=_single_snr_override(overrides, cfg.snr_db))
    return replace(cfg, trials=_trials_override(overrides, cfg.trials))


def config_hash(cfg) -> str:
    """Stable hash of a resolved experiment config, for output provenance."""
    payload = json.dumps(asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
