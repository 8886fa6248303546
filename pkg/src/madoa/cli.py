"""Command-line interface.

Subcommands: ``layout`` (emit a layout CSV), ``crb`` (print the per-family
bound table), and the four experiments (``spectrum``, ``rmse-snr``, ``psr``,
``rmse-area``). Experiment subcommands read a TOML config (the packaged
defaults when ``--config`` is omitted) with flag overrides for trials, seed,
SNR, family subset and output directory.

Exit codes: 0 success, 2 configuration/usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import sys

from .config import (
    load_raw_config,
    psr_config,
    rmse_area_config,
    rmse_snr_config,
    spectrum_config,
)
from .crb import crb, q_factor, shape_position_objective
from .exceptions import ConfigurationError, InfeasibleError, MadoaError
from .experiments import (
    build_family_layout,
    run_psr_vs_separation,
    run_rmse_vs_area,
    run_rmse_vs_snr,
    run_spectrum,
)
from .geometry import (
    build_pma_layout,
    build_sma_layout,
    build_uca_layout,
    build_ura_layout,
    moment_stats,
    save_layout_csv,
)
from .signal import noise_variance_for_snr


def _parse_snr_list(text: str) -> list:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigurationError(f"--snr expects comma-separated numbers, got {text!r}") from None


def _parse_family_list(text: str) -> list:
    return [part.strip() for part in text.split(",") if part.strip() != ""]


def _experiment_overrides(args) -> dict:
    overrides = {
        "seed": getattr(args, "seed", None),
        "out_dir": getattr(args, "out", None),
    }
    if getattr(args, "snr", None) is not None:
        overrides["snr_db"] = _parse_snr_list(args.snr)
    if getattr(args, "family", None) is not None:
        overrides["families"] = _parse_family_list(args.family)
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    return overrides


def _add_experiment_flags(parser: argparse.ArgumentParser, *, trials: bool) -> None:
    parser.add_argument("--config", help="TOML config file (default: packaged defaults)")
    parser.add_argument("--seed", type=int, help="override the Monte Carlo seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--snr", help="override SNR in dB (comma-separated for sweeps)")
    parser.add_argument("--family", help="comma-separated family subset (pma,sma,uca,ura)")
    parser.add_argument("--plot", action="store_true", help="also write PNG plots")
    if trials:
        parser.add_argument("--trials", type=int, help="override Monte Carlo trials per point")


def _cmd_layout(args) -> int:
    family = args.family.lower()
    if family == "pma":
        _require(args, "side", "n")
        layout = build_pma_layout(args.side, args.dmin, args.n)
    elif family == "sma":
        _require(args, "side", "n")
        layout = build_sma_layout(args.side, args.dmin, args.n)
    elif family == "uca":
        _require(args, "radius", "n")
        layout = build_uca_layout(args.radius, args.n)
    elif family == "ura":
        layout = build_ura_layout(args.rows, args.cols, args.pitch)
    else:
        raise ConfigurationError(f"unknown family {args.family!r}")
    if args.out == "-":
        save_layout_csv(layout, sys.stdout)
    else:
        save_layout_csv(layout, args.out)
        print(f"wrote {layout.n} antennas to {args.out}")
    return 0


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise ConfigurationError(f"--{name} is required for family {args.family!r}")


def _cmd_crb(args) -> int:
    raw = load_raw_config(args.config)
    overrides = {}
    if args.snr is not None:
        overrides["snr_db"] = _parse_snr_list(args.snr)
    if args.family is not None:
        overrides["families"] = _parse_family_list(args.family)
    cfg = spectrum_config(raw, **overrides)
    common = cfg.common
    sigma_n2 = noise_variance_for_snr(cfg.snr_db, [common.source_power])
    if sigma_n2 == 0.0:
        raise ConfigurationError("the bound table needs a finite SNR")
    q = q_factor(sigma_n2, cfg.n_snapshots, common.source_power, common.n_antennas)

    header = (
        f"{'family':<8}{'var_x':>10}{'var_y':>10}{'cov_xy':>11}"
        f"{'objective':>11}{'crb_theta':>12}{'crb_phi':>12}{'crb_sum':>12}"
    )
    lines = [header]
    rows = []
    for family in sorted(common.families, key=lambda f: f.value):
        layout = build_family_layout(family, common)
        stats = moment_stats(layout)
        bounds = crb(stats, q)
        objective = shape_position_objective(stats)
        rows.append(
            (
                family.value, stats.var_x, stats.var_y, stats.cov_xy, objective,
                bounds.crb_theta_cos, bounds.crb_phi_cos,
                bounds.crb_theta_cos + bounds.crb_phi_cos,
            )
        )
        lines.append(
            f"{family.value:<8}{stats.var_x:>10.4f}{stats.var_y:>10.4f}"
            f"{stats.cov_xy:>11.2e}{objective:>11.4f}"
            f"{bounds.crb_theta_cos:>12.4e}{bounds.crb_phi_cos:>12.4e}"
            f"{bounds.crb_theta_cos + bounds.crb_phi_cos:>12.4e}"
        )
    print(f"snr_db={cfg.snr_db}  snapshots={cfg.n_snapshots}  "
          f"n_antennas={common.n_antennas}  q={q:.6e}")
    print("\n".join(lines))
    if args.out:
        import csv as _csv

        with open(args.out, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(
                ["family", "var_x", "var_y", "cov_xy", "objective",
                 "crb_theta_cos", "crb_phi_cos", "crb_sum"]
            )
            for row in rows:
                writer.writerow([row[0]] + [f"{v:.9g}" for v in row[1:]])
        print(f"wrote {args.out}")
    return 0


def _cmd_spectrum(args) -> int:
    raw = load_raw_config(args.config)
    cfg = spectrum_config(raw, **_experiment_overrides(args))
    result = run_spectrum(cfg)
    print(f"wrote {len(result.spectrum_paths)} spectrum file(s) and {result.summary.csv_path}")
    if args.plot:
        from .plotting import plot_spectra

        for path in plot_spectra(result, cfg.common.out_dir):
            print(f"wrote {path}")
    return 0


def _cmd_rmse_snr(args) -> int:
    raw = load_raw_config(args.config)
    cfg = rmse_snr_config(raw, **_experiment_overrides(args))
    result = run_rmse_vs_snr(cfg)
    print(f"wrote {result.csv_path}")
    if args.plot:
        from .plotting import plot_rmse_sweep

        print(f"wrote {plot_rmse_sweep(result, cfg.common.out_dir, 'snr_db')}")
    return 0


def _cmd_psr(args) -> int:
    raw = load_raw_config(args.config)
    cfg = psr_config(raw, **_experiment_overrides(args))
    result = run_psr_vs_separation(cfg)
    print(f"wrote {result.csv_path}")
    if args.plot:
        from .plotting import plot_psr

        print(f"wrote {plot_psr(result, cfg.common.out_dir)}")
    return 0


def _cmd_rmse_area(args) -> int:
    raw = load_raw_config(args.config)
    cfg = rmse_area_config(raw, **_experiment_overrides(args))
    result = run_rmse_vs_area(cfg)
    print(f"wrote {result.csv_path}")
    if args.plot:
        from .plotting import plot_rmse_sweep

        print(f"wrote {plot_rmse_sweep(result, cfg.common.out_dir, 'area_nominal')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="madoa",
        description="Movable-antenna array design and 2D DOA estimation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_layout = sub.add_parser("layout", help="emit a layout CSV for one family")
    p_layout.add_argument("--family", required=True, choices=["pma", "sma", "uca", "ura"])
    p_layout.add_argument("--side", type=float, help="region side (pma/sma), wavelengths")
    p_layout.add_argument("--dmin", type=float, default=0.5, help="minimum spacing (default 0.5)")
    p_layout.add_argument("--n", type=int, help="number of antennas (pma/sma/uca)")
    p_layout.add_argument("--radius", type=float, help="circle radius (uca), wavelengths")
    p_layout.add_argument("--rows", type=int, default=6, help="grid rows (ura)")
    p_layout.add_argument("--cols", type=int, default=6, help="grid cols (ura)")
    p_layout.add_argument("--pitch", type=float, default=0.5, help="grid pitch (ura)")
    p_layout.add_argument("--out", default="-", help="output file ('-' = stdout)")
    p_layout.set_defaults(func=_cmd_layout)

    p_crb = sub.add_parser("crb", help="print the per-family bound table")
    p_crb.add_argument("--config", help="TOML config file (default: packaged defaults)")
    p_crb.add_argument("--snr", help="override SNR in dB")
    p_crb.add_argument("--family", help="comma-separated family subset")
    p_crb.add_argument("--out", help="also write the table as CSV")
    p_crb.set_defaults(func=_cmd_crb)

    for name, func, trials in (
        ("spectrum", _cmd_spectrum, False),
        ("rmse-snr", _cmd_rmse_snr, True),
        ("psr", _cmd_psr, True),
        ("rmse-area", _cmd_rmse_area, True),
    ):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        _add_experiment_flags(p, trials=trials)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help and usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigurationError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MadoaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
