"""Command-line front end: ingestion, analyses, and curve/report artifacts.

Tabular data moves as CSV (um and MHz at the boundary, SI inside), structured
results as JSON.  Every artifact embeds the resolved run configuration and
seed, outputs are written atomically, and identical invocations produce
bit-identical files, so runs are reproducible by construction.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .core import (
    ION_REGISTRY,
    RABI_CALIBRATION_FACTOR,
    IonSpecies,
    Measurement,
    MeasurementMethod,
    ModeDirection,
    SpectralDensityPoint,
    apply_method_calibration,
    heating_rate_to_SE,
    normalize_heating_rate,
    SE_to_heating_rate,
)
from .errors import InvalidInputError, TrapNoiseError
from .fitting import fit_distance_scaling, fit_frequency_scaling
from .geometry import default_trap_geometry, load_geometry
from .patch_analytic import AnalyticPatchParams, analytic_SE, fit_zeta, local_exponent
from .patch_voronoi import (
    configuration_to_dict,
    estimate_autocorrelation,
    fit_patch_amplitudes,
    generate_patches,
    load_patches,
)
from .technical_noise import ElectrodeNoiseSpec, fit_electrode_amplitudes, technical_SE_curve

SCHEMA_VERSION = 1
CONFIG_ENV_VAR = "TRAPNOISE_CONFIG"

_UM = 1e-6
_MHZ_TO_RAD = 2.0 * math.pi * 1e6

MEASUREMENT_COLUMNS = [
    "distance_um",
    "frequency_MHz",
    "direction",
    "method",
    "nbardot_per_s",
    "sigma_per_s",
]
SE_COLUMNS = ["distance_um", "frequency_MHz", "direction", "SE_V2m2Hz", "SE_sigma"]


@dataclasses.dataclass
class Dataset:
    """Measurement rows plus provenance."""

    measurements: list
    source: str
    calibration_applied: bool


@dataclasses.dataclass
class RunConfig:
    """Resolved settings of one invocation, embedded in every artifact."""

    subcommand: str
    geometry: str = "default"
    ion: str = "Ca40"
    seed: int | None = None
    output_dir: str = "."
    params: dict = dataclasses.field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "subcommand": self.subcommand,
            "geometry": self.geometry,
            "ion": self.ion,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "params": self.params,
        }


# ---------------------------------------------------------------------------
# CSV ingestion and emission


def _parse_direction(text: str) -> ModeDirection:
    try:
        return ModeDirection(text.strip().lower())
    except ValueError:
        raise InvalidInputError(
            f"unknown direction {text!r}; expected planar_x, planar_y or normal"
        ) from None


def _parse_method(text: str) -> MeasurementMethod:
    try:
        return MeasurementMethod(text.strip().lower())
    except ValueError:
        raise InvalidInputError(f"unknown method {text!r}; expected sideband or rabi") from None


def _float_field(row: dict, key: str) -> float:
    raw = (row.get(key) or "").strip()
    try:
        return float(raw)
    except ValueError:
        raise InvalidInputError(f"column {key!r}: not a number: {raw!r}") from None


def _open_csv(path):
    # reproducibility-header comment lines are not part of the table
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = "".join(line for line in fh if not line.startswith("#"))
    return io.StringIO(text)


def ingest_csv(
    path, apply_calibration: bool = True, rabi_factor: float = RABI_CALIBRATION_FACTOR
) -> Dataset:
    """Read a heating-rate CSV into measurements, converting to SI.

    Columns: distance_um, frequency_MHz, direction {planar_x|planar_y|normal},
    method {sideband|rabi}, nbardot_per_s, sigma_per_s.  The Rabi/sideband
    cross-calibration is applied here (once, at ingestion) unless disabled.
    Malformed rows raise with their line number.
    """
    reader = csv.DictReader(_open_csv(path))
    if reader.fieldnames is None:
        print(f"warning: {path}: empty file, no measurements", file=sys.stderr)
        return Dataset([], str(path), apply_calibration)
    missing = [c for c in MEASUREMENT_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise InvalidInputError(f"{path}: missing columns: {', '.join(missing)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        try:
            m = Measurement(
                distance=_float_field(row, "distance_um") * _UM,
                secular_frequency=_float_field(row, "frequency_MHz") * _MHZ_TO_RAD,
                direction=_parse_direction(row["direction"]),
                method=_parse_method(row["method"]),
                heating_rate=_float_field(row, "nbardot_per_s"),
                heating_rate_sigma=_float_field(row, "sigma_per_s"),
            )
        except TrapNoiseError as exc:
            raise InvalidInputError(f"{path}: line {lineno}: {exc}") from None
        if apply_calibration:
            m = apply_method_calibration(m, rabi_factor)
        rows.append(m)
    if not rows:
        print(f"warning: {path}: no data rows", file=sys.stderr)
    return Dataset(rows, str(path), apply_calibration)


def read_se_csv(path):
    """Read spectral-density points; the method column is optional."""
    reader = csv.DictReader(_open_csv(path))
    if reader.fieldnames is None:
        return [], []
    missing = [c for c in SE_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise InvalidInputError(f"{path}: missing columns: {', '.join(missing)}")
    points = []
    methods = []
    for lineno, row in enumerate(reader, start=2):
        try:
            points.append(
                SpectralDensityPoint(
                    distance=_float_field(row, "distance_um") * _UM,
                    angular_frequency=_float_field(row, "frequency_MHz") * _MHZ_TO_RAD,
                    direction=_parse_direction(row["direction"]),
                    S_E=_float_field(row, "SE_V2m2Hz"),
                    S_E_sigma=_float_field(row, "SE_sigma"),
                )
            )
            methods.append(_parse_method(row["method"]) if row.get("method") else None)
        except TrapNoiseError as exc:
            raise InvalidInputError(f"{path}: line {lineno}: {exc}") from None
    return points, methods


def _sort_key_se(p: SpectralDensityPoint):
    # canonical data order: makes fit sums independent of file row order
    return (p.distance, p.direction.value, p.angular_frequency, p.S_E)


def atomic_write_text(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv_artifact(path, config: RunConfig, fieldnames, rows) -> None:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config.to_dict(), sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    atomic_write_text(path, buf.getvalue())


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))  # shortest round-trip representation
    return value


def write_json_artifact(path, config: RunConfig, payload: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "config": config.to_dict()}
    doc.update(payload)
    atomic_write_text(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Shared helpers


def parse_grid(spec: str, unit: float = 1.0) -> np.ndarray:
    """Parse '50:300:25' (inclusive), '50,70,100' or a single value."""
    spec = spec.strip()
    try:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise ValueError("expected start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError("need stop >= start and step > 0")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(n)]
        elif "," in spec:
            values = [float(p) for p in spec.split(",")]
        else:
            values = [float(spec)]
    except ValueError as exc:
        raise InvalidInputError(f"bad grid {spec!r}: {exc}") from None
    grid = np.array(values) * unit
    if len(grid) == 0 or np.any(grid <= 0):
        raise InvalidInputError(f"grid {spec!r} must be non-empty and positive")
    return grid


def _resolve_geometry(name: str):
    if name == "default":
        return default_trap_geometry()
    return load_geometry(name)


def _resolve_ion(name: str) -> IonSpecies:
    try:
        return ION_REGISTRY[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown ion {name!r}; known: {', '.join(sorted(ION_REGISTRY))}"
        ) from None


def _out(config: RunConfig, filename: str) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    return os.path.join(config.output_dir, filename)


def _se_row(p: SpectralDensityPoint, method=None) -> dict:
    row = {
        "distance_um": p.distance / _UM,
        "frequency_MHz": p.angular_frequency / _MHZ_TO_RAD,
        "direction": p.direction.value,
        "SE_V2m2Hz": p.S_E,
        "SE_sigma": p.S_E_sigma,
    }
    if method is not None:
        row["method"] = method.value
    return row


# ---------------------------------------------------------------------------
# Subcommand handlers


def _cmd_convert(args) -> int:
    config = RunConfig(
        subcommand="convert",
        ion=args.ion,
        output_dir=args.output_dir,
        params={
            "input": args.input,
            "inverse": args.inverse,
            "calibration": not args.no_calibration,
        },
    )
    ion = _resolve_ion(args.ion)
    if args.inverse:
        points, methods = read_se_csv(args.input)
        rows = []
        for p, method in zip(points, methods):
            m = SE_to_heating_rate(p, ion, method or MeasurementMethod.SIDEBAND)
            rows.append(
                {
                    "distance_um": m.distance / _UM,
                    "frequency_MHz": m.secular_frequency / _MHZ_TO_RAD,
                    "direction": m.direction.value,
                    "method": m.method.value,
                    "nbardot_per_s": m.heating_rate,
                    "sigma_per_s": m.heating_rate_sigma,
                }
            )
        path = _out(config, "measurements.csv")
        write_csv_artifact(path, config, MEASUREMENT_COLUMNS, rows)
    else:
        dataset = ingest_csv(args.input, apply_calibration=not args.no_calibration)
        rows = [_se_row(heating_rate_to_SE(m, ion), m.method) for m in dataset.measurements]
        path = _out(config, "spectral_density.csv")
        write_csv_artifact(path, config, SE_COLUMNS + ["method"], rows)
    print(f"wrote {path}")
    return 0


def _cmd_fit_powerlaw(args) -> int:
    config = RunConfig(
        subcommand="fit-powerlaw",
        output_dir=args.output_dir,
        params={"input": args.input, "mode": args.mode},
    )
    points, _ = read_se_csv(args.input)
    points = sorted(points, key=_sort_key_se)
    fitter = fit_distance_scaling if args.mode == "distance" else fit_frequency_scaling
    fits = {}
    for direction in ModeDirection:
        sel = [p for p in points if p.direction is direction]
        if len(sel) >= 3:
            fits[direction.value] = fitter(sel, direction)
    if not fits:
        raise InvalidInputError("no direction has >= 3 data points")
    payload = {
        "mode": args.mode,
        "fits": {
            key: {
                "exponent": f.exponent,
                "exponent_sigma": f.exponent_sigma,
                "log_prefactor": f.log_prefactor,
                "log_prefactor_sigma": f.log_prefactor_sigma,
                "reduced_chi2": f.reduced_chi2,
                "n_points": f.n_points,
                "flagged_points": list(f.flagged),
            }
            for key, f in fits.items()
        },
    }
    path = _out(config, "powerlaw_fit.json")
    write_json_artifact(path, config, payload)
    for key, f in sorted(fits.items()):
        print(f"{key}: exponent {f.exponent:+.4f} +- {f.exponent_sigma:.4f}")
    print(f"wrote {path}")
    return 0


def _cmd_simulate_technical(args) -> int:
    config = RunConfig(
        subcommand="simulate-technical",
        geometry=args.geometry,
        output_dir=args.output_dir,
        params={
            "amplitude_uv": args.amplitude_uv,
            "electrodes": args.electrodes,
            "d_um": args.d_um,
        },
    )
    g = _resolve_geometry(args.geometry)
    names = g.names if args.electrodes == "all" else [s.strip() for s in args.electrodes.split(",")]
    distances = parse_grid(args.d_um, _UM)
    rows = []
    for name in names:
        spec = ElectrodeNoiseSpec({name: args.amplitude_uv * 1e-6})
        curve = technical_SE_curve(g, spec, distances)
        for d, (sx, sy, sz) in zip(distances, curve):
            rows.append(
                {
                    "electrode": name,
                    "distance_um": d / _UM,
                    "Sx_V2m2Hz": sx,
                    "Sy_V2m2Hz": sy,
                    "Sz_V2m2Hz": sz,
                }
            )
    path = _out(config, "technical_curves.csv")
    write_csv_artifact(
        path, config, ["electrode", "distance_um", "Sx_V2m2Hz", "Sy_V2m2Hz", "Sz_V2m2Hz"], rows
    )
    print(f"wrote {path}")
    return 0


def _cmd_fit_technical(args) -> int:
    config = RunConfig(
        subcommand="fit-technical",
        geometry=args.geometry,
        output_dir=args.output_dir,
        params={"input": args.input},
    )
    g = _resolve_geometry(args.geometry)
    points, _ = read_se_csv(args.input)
    points = sorted(points, key=_sort_key_se)
    spec, report = fit_electrode_amplitudes(g, points)
    payload = {
        "amplitudes_v_per_sqrthz": spec.amplitudes,
        "chi2": report.chi2,
        "reduced_chi2": report.reduced_chi2,
        "weighted": report.weighted,
        "n_points": report.n_points,
        "n_parameters": report.n_parameters,
        "degenerate_groups": [list(grp) for grp in report.degenerate_groups],
        "residuals": report.residuals.tolist(),
    }
    path = _out(config, "technical_fit.json")
    write_json_artifact(path, config, payload)
    distances = np.unique([p.distance for p in points])
    curve = technical_SE_curve(g, spec, distances)
    rows = [
        {"distance_um": d / _UM, "Sx_V2m2Hz": sx, "Sy_V2m2Hz": sy, "Sz_V2m2Hz": sz}
        for d, (sx, sy, sz) in zip(distances, curve)
    ]
    curve_path = _out(config, "technical_fit_curve.csv")
    write_csv_artifact(
        curve_path, config, ["distance_um", "Sx_V2m2Hz", "Sy_V2m2Hz", "Sz_V2m2Hz"], rows
    )
    print(f"reduced chi2 = {report.reduced_chi2:.4g}")
    print(f"wrote {path}")
    print(f"wrote {curve_path}")
    return 0


def _cmd_analytic_patch(args) -> int:
    if args.action == "eval":
        config = RunConfig(
            subcommand="analytic-patch eval",
            output_dir=args.output_dir,
            params={"zeta_um": args.zeta_um, "amplitude": args.amplitude, "d_um": args.d_um},
        )
        params = AnalyticPatchParams(zeta=args.zeta_um * _UM, amplitude=args.amplitude)
        distances = parse_grid(args.d_um, _UM)
        rows = []
        se_rows = []
        for d in distances:
            planar = analytic_SE(params, float(d), ModeDirection.PLANAR_Y)
            rows.append(
                {
                    "distance_um": d / _UM,
                    "S_planar_V2m2Hz": planar,
                    "S_normal_V2m2Hz": 2.0 * planar,
                    "local_beta": local_exponent(params, float(d)),
                }
            )
            for direction, value in (
                (ModeDirection.PLANAR_Y, planar),
                (ModeDirection.NORMAL, 2.0 * planar),
            ):
                se_rows.append(
                    _se_row(SpectralDensityPoint(float(d), params.omega, direction, value))
                )
        path = _out(config, "analytic_curve.csv")
        write_csv_artifact(
            path,
            config,
            ["distance_um", "S_planar_V2m2Hz", "S_normal_V2m2Hz", "local_beta"],
            rows,
        )
        # same curve in the shared spectral-density schema, for the fit commands
        se_path = _out(config, "analytic_curve_points.csv")
        write_csv_artifact(se_path, config, SE_COLUMNS, se_rows)
        print(f"wrote {path}")
        print(f"wrote {se_path}")
        return 0

    config = RunConfig(
        subcommand="analytic-patch fit",
        output_dir=args.output_dir,
        params={"input": args.input},
    )
    points, _ = read_se_csv(args.input)
    points = sorted(points, key=_sort_key_se)
    params, report = fit_zeta(points)
    payload = {
        "zeta_um": params.zeta / _UM,
        "zeta_sigma_um": report.zeta_sigma / _UM if math.isfinite(report.zeta_sigma) else None,
        "amplitude_V2Hz_m2": params.amplitude,
        "chi2": report.chi2,
        "reduced_chi2": report.reduced_chi2,
        "at_boundary": report.at_boundary,
        "zeta_bounds_um": [b / _UM for b in report.zeta_bounds],
        "profile_zeta_um": (report.profile_zeta / _UM).tolist(),
        "profile_chi2": report.profile_chi2.tolist(),
    }
    path = _out(config, "analytic_fit.json")
    write_json_artifact(path, config, payload)
    rows = []
    for d in np.unique([p.distance for p in points]):
        planar = analytic_SE(params, float(d), ModeDirection.PLANAR_Y)
        rows.append(
            {
                "distance_um": d / _UM,
                "S_planar_V2m2Hz": planar,
                "S_normal_V2m2Hz": 2.0 * planar,
            }
        )
    curve_path = _out(config, "analytic_fit_curve.csv")
    write_csv_artifact(
        curve_path, config, ["distance_um", "S_planar_V2m2Hz", "S_normal_V2m2Hz"], rows
    )
    flag = " (at scan boundary)" if report.at_boundary else ""
    print(f"zeta = {params.zeta / _UM:.4g} um{flag}")
    print(f"wrote {path}")
    print(f"wrote {curve_path}")
    return 0


def _cmd_voronoi(args) -> int:
    if args.action == "generate":
        config = RunConfig(
            subcommand="voronoi generate",
            geometry=args.geometry,
            seed=args.seed,
            output_dir=args.output_dir,
            params={"density_per_mm2": args.density_per_mm2},
        )
        g = _resolve_geometry(args.geometry)
        density = args.density_per_mm2 * 1e6  # per mm^2 -> per m^2
        c = generate_patches(g, density, args.seed)
        path = _out(config, "patches.json")
        write_json_artifact(path, config, configuration_to_dict(c))
        print(f"seed = {args.seed}")
        print(f"generated {len(c.patches)} patches")
        print(f"wrote {path}")
        return 0

    if args.action == "autocorr":
        config = RunConfig(
            subcommand="voronoi autocorr",
            seed=args.seed,
            output_dir=args.output_dir,
            params={
                "patches": args.patches,
                "grid_step_um": args.grid_step_um,
                "realizations": args.realizations,
            },
        )
        c = load_patches(args.patches)
        step = args.grid_step_um * _UM if args.grid_step_um else None
        est = estimate_autocorrelation(
            c, grid_step=step, seed=args.seed, n_realizations=args.realizations
        )
        rows = [
            {"lag_um": lag / _UM, "autocorrelation": val}
            for lag, val in zip(est.lags, est.values)
        ]
        curve_path = _out(config, "autocorr.csv")
        write_csv_artifact(curve_path, config, ["lag_um", "autocorrelation"], rows)
        payload = {
            "fitted_zeta_um": est.fitted_zeta / _UM,
            "zeta_exceeds_region": est.zeta_exceeds_region,
            "fit_range_um": est.fit_range / _UM,
            "n_patches": len(c.patches),
        }
        path = _out(config, "autocorr_fit.json")
        write_json_artifact(path, config, payload)
        print(f"seed = {args.seed}")
        print(f"fitted zeta = {est.fitted_zeta / _UM:.4g} um")
        print(f"wrote {curve_path}")
        print(f"wrote {path}")
        return 0

    config = RunConfig(
        subcommand="voronoi fit",
        output_dir=args.output_dir,
        params={
            "patches": args.patches,
            "input": args.input,
            "max_ratio": args.max_ratio if args.max_ratio > 0 else None,
        },
    )
    c = load_patches(args.patches)
    points, _ = read_se_csv(args.input)
    points = sorted(points, key=_sort_key_se)
    max_ratio = args.max_ratio if args.max_ratio > 0 else None
    fitted, report = fit_patch_amplitudes(c, points, max_ratio=max_ratio)
    fitted_path = _out(config, "patches_fitted.json")
    write_json_artifact(fitted_path, config, configuration_to_dict(fitted))
    amps = fitted.amplitudes()
    positive = amps[amps > 0]
    payload = {
        "chi2": report.chi2,
        "reduced_chi2": report.reduced_chi2,
        "weighted": report.weighted,
        "max_ratio_constraint": report.max_ratio,
        "fitted_amplitude_ratio": float(positive.max() / positive.min()) if len(positive) else None,
        "planar_anisotropy_max": report.planar_anisotropy_max,
        "residuals": report.residuals.tolist(),
    }
    path = _out(config, "patch_fit.json")
    write_json_artifact(path, config, payload)
    rows = [
        {"distance_um": d / _UM, "Sx_V2m2Hz": sx, "Sy_V2m2Hz": sy, "Sz_V2m2Hz": sz}
        for d, (sx, sy, sz) in zip(report.curve_distances, report.curve_SE)
    ]
    curve_path = _out(config, "patch_fit_curve.csv")
    write_csv_artifact(
        curve_path, config, ["distance_um", "Sx_V2m2Hz", "Sy_V2m2Hz", "Sz_V2m2Hz"], rows
    )
    print(f"reduced chi2 = {report.reduced_chi2:.4g}")
    print(f"planar anisotropy (max Sx:Sy ratio) = {report.planar_anisotropy_max:.3f}")
    print(f"wrote {fitted_path}")
    print(f"wrote {path}")
    print(f"wrote {curve_path}")
    return 0


def _cmd_normalize(args) -> int:
    config = RunConfig(
        subcommand="normalize",
        ion=args.ion,
        output_dir=args.output_dir,
        params={
            "input": args.input,
            "ref_ion": args.ref_ion,
            "ref_frequency_mhz": args.ref_frequency_mhz,
            "calibration": not args.no_calibration,
        },
    )
    ion = _resolve_ion(args.ion)
    ref_ion = _resolve_ion(args.ref_ion)
    ref_omega = args.ref_frequency_mhz * _MHZ_TO_RAD
    dataset = ingest_csv(args.input, apply_calibration=not args.no_calibration)
    rows = []
    for m in dataset.measurements:
        p = heating_rate_to_SE(m, ion)
        rows.append(
            {
                "distance_um": m.distance / _UM,
                "frequency_MHz": m.secular_frequency / _MHZ_TO_RAD,
                "direction": m.direction.value,
                "method": m.method.value,
                "nbardot_per_s": m.heating_rate,
                "nbardot_ref_per_s": normalize_heating_rate(m, ion, ref_ion, ref_omega),
                "SE_V2m2Hz": p.S_E,
            }
        )
    path = _out(config, "normalized.csv")
    write_csv_artifact(
        path,
        config,
        [
            "distance_um",
            "frequency_MHz",
            "direction",
            "method",
            "nbardot_per_s",
            "nbardot_ref_per_s",
            "SE_V2m2Hz",
        ],
        rows,
    )
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _env_defaults() -> dict:
    path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    allowed = {"geometry", "ion", "output_dir", "seed"}
    return {k: v for k, v in doc.items() if k in allowed}


def build_parser(env: dict | None = None) -> argparse.ArgumentParser:
    env = env or {}
    parser = argparse.ArgumentParser(
        prog="trapnoise",
        description="Electric-field noise modeling above planar ion-trap electrodes",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, geometry=False, ion=False, seed=None):
        # precedence: flag > TRAPNOISE_CONFIG file > built-in default
        p.add_argument(
            "--output-dir", default=env.get("output_dir", "."), help="artifact directory"
        )
        if geometry:
            p.add_argument(
                "--geometry",
                default=env.get("geometry", "default"),
                help="geometry JSON path or 'default'",
            )
        if ion:
            p.add_argument("--ion", default=env.get("ion", "Ca40"), help="ion species name")
        if seed is not None:
            p.add_argument("--seed", type=int, default=env.get("seed", seed), help="RNG seed")

    p = sub.add_parser("convert", help="heating rate <-> spectral density")
    p.add_argument("--input", required=True)
    p.add_argument("--inverse", action="store_true", help="spectral density -> heating rate")
    p.add_argument("--no-calibration", action="store_true", help="skip the Rabi rescaling")
    common(p, ion=True)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("fit-powerlaw", help="distance or frequency power-law exponents")
    p.add_argument("--input", required=True, help="spectral-density CSV")
    p.add_argument("--mode", choices=["distance", "frequency"], default="distance")
    common(p)
    p.set_defaults(func=_cmd_fit_powerlaw)

    p = sub.add_parser("simulate-technical", help="per-electrode noise curves")
    p.add_argument("--amplitude-uv", type=float, default=3.0, help="voltage noise in uV/sqrt(Hz)")
    p.add_argument("--electrodes", default="all", help="comma list or 'all'")
    p.add_argument("--d-um", default="50:300:10", help="distance grid in um (start:stop:step)")
    common(p, geometry=True)
    p.set_defaults(func=_cmd_simulate_technical)

    p = sub.add_parser("fit-technical", help="joint per-electrode amplitude fit")
    p.add_argument("--input", required=True, help="spectral-density CSV")
    common(p, geometry=True)
    p.set_defaults(func=_cmd_fit_technical)

    p = sub.add_parser("analytic-patch", help="correlated patch model curves and fits")
    p.add_argument("action", choices=["eval", "fit"])
    p.add_argument("--zeta-um", type=float, default=106.0, help="correlation length (eval)")
    p.add_argument("--amplitude", type=float, default=1.0, help="combined amplitude (eval)")
    p.add_argument("--d-um", default="50:300:25", help="distance grid in um (eval)")
    p.add_argument("--input", help="spectral-density CSV (fit)")
    common(p)
    p.set_defaults(func=_cmd_analytic_patch)

    p = sub.add_parser("voronoi", help="fixed-patch pipeline")
    p.add_argument("action", choices=["generate", "autocorr", "fit"])
    p.add_argument("--density-per-mm2", type=float, default=20.0, help="seed density (generate)")
    p.add_argument("--patches", help="patch configuration JSON (autocorr, fit)")
    p.add_argument("--grid-step-um", type=float, default=0.0, help="raster step (autocorr)")
    p.add_argument("--realizations", type=int, default=20, help="value draws (autocorr)")
    p.add_argument("--input", help="spectral-density CSV (fit)")
    p.add_argument(
        "--max-ratio",
        type=float,
        default=4.0,
        help="amplitude ratio bound for fit; 0 disables the constraint",
    )
    common(p, geometry=True, seed=0)
    p.set_defaults(func=_cmd_voronoi)

    p = sub.add_parser("normalize", help="rescale rates to a reference ion and frequency")
    p.add_argument("--input", required=True, help="heating-rate CSV")
    p.add_argument("--ref-ion", default="Ca40")
    p.add_argument("--ref-frequency-mhz", type=float, default=1.0)
    p.add_argument("--no-calibration", action="store_true")
    common(p, ion=True)
    p.set_defaults(func=_cmd_normalize)

    return parser


def _check_action_options(args) -> None:
    command = getattr(args, "command", "")
    action = getattr(args, "action", "")
    requires_input = (command, action) in {("analytic-patch", "fit"), ("voronoi", "fit")}
    if requires_input and not getattr(args, "input", None):
        raise InvalidInputError(f"{command} {action} requires --input")
    requires_patches = command == "voronoi" and action in {"autocorr", "fit"}
    if requires_patches and not getattr(args, "patches", None):
        raise InvalidInputError(f"{command} {action} requires --patches")


def main(argv=None) -> int:
    try:
        parser = build_parser(_env_defaults())
        args = parser.parse_args(argv)
        _check_action_options(args)
        return args.func(args)
    except (TrapNoiseError, OSError, json.JSONDecodeError) as exc:
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(error), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
