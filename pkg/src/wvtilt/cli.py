"""Command-line front end.

Lab units at the boundary (nm, um, uW, mV, nrad), SI inside the library.
Results go to ``--out`` (and a short summary to stdout); diagnostics go to
stderr. Exit status: 0 success, 2 validation error, 3 reproduction failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import lab_experiment as lab
from . import reproduce, shot_noise_mc
from .detection import PhotonBudget
from .hg_modes import BeamGeometry
from .weak_measurement import InterferometerSetting, TiltKick

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_REPRODUCTION = 3

NM, UM, UW, MV, NRAD = 1e-9, 1e-6, 1e-6, 1e-3, 1e-9

SCENARIO_OVERRIDES = {
    "wavelength_nm", "waist_um", "p_in_uw", "p_out_uw", "p_lo_uw", "rbw_hz",
    "analysis_frequency_hz", "efficiency", "piezo_slope_nrad_per_mv",
}
POINT_OVERRIDES = {"n_injected", "postselection", "theta_nrad", "v_mv"}
ALLOWED = {
    "mmt": SCENARIO_OVERRIDES | {"n_injected", "postselection"},
    "snr": SCENARIO_OVERRIDES | POINT_OVERRIDES,
    "sweep": SCENARIO_OVERRIDES | {"axis", "start", "stop", "points", "spacing", "mode", "theta_nrad"},
    "reproduce": set(),
    "montecarlo": SCENARIO_OVERRIDES | POINT_OVERRIDES | {"scheme", "model", "workers", "block_size"},
    "calibrate": SCENARIO_OVERRIDES,
    "optimize": SCENARIO_OVERRIDES | {"max_p_in_uw", "max_p_out_uw", "min_p_out_uw"},
}
STRING_KEYS = {"axis", "spacing", "mode", "scheme", "model"}


class UsageError(Exception):
    pass


def parse_overrides(pairs, subcommand: str) -> dict:
    out = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        if key not in ALLOWED[subcommand]:
            raise UsageError(f"unknown key {key!r} for '{subcommand}'; allowed: {sorted(ALLOWED[subcommand])}")
        if key in STRING_KEYS:
            out[key] = value.strip()
        else:
            try:
                out[key] = float(value)
            except ValueError:
                raise UsageError(f"{key} expects a number, got {value!r}") from None
    return out


def build_scenario(path: Optional[str], overrides: dict) -> lab.LabScenario:
    scenario = lab.LabScenario.load(path) if path else lab.table1_scenario(efficiency=1.0)
    geometry = scenario.geometry
    if "wavelength_nm" in overrides or "waist_um" in overrides:
        geometry = BeamGeometry(
            overrides.get("wavelength_nm", geometry.wavelength / NM) * NM,
            overrides.get("waist_um", geometry.waist / UM) * UM,
        )
    changes = {"geometry": geometry}
    for key, attr, unit in [
        ("p_in_uw", "p_in", UW),
        ("p_out_uw", "p_out", UW),
        ("p_lo_uw", "p_lo", UW),
        ("rbw_hz", "rbw", 1.0),
        ("analysis_frequency_hz", "analysis_frequency", 1.0),
        ("efficiency", "efficiency", 1.0),
        ("piezo_slope_nrad_per_mv", "piezo_slope", NRAD / MV),
    ]:
        if key in overrides:
            changes[attr] = overrides[key] * unit
    if "n_injected" in overrides:
        p_in = lab.power_from_photons(overrides["n_injected"], geometry.wavelength, changes.get("rbw", scenario.rbw))
        ratio = changes.get("p_out", scenario.p_out) / changes.get("p_in", scenario.p_in)
        changes["p_in"] = p_in
        changes.setdefault("p_out", min(ratio, 1.0) * p_in)
    if overrides.get("postselection"):
        changes["p_out"] = overrides["postselection"] * changes.get("p_in", scenario.p_in)
    return replace(scenario, **changes)


def point_setting(scenario: lab.LabScenario, overrides: dict) -> Optional[InterferometerSetting]:
    """Post-selection override 0 selects the dark limit phi -> 0."""
    if "postselection" in overrides and overrides["postselection"] == 0:
        return None
    return scenario.setting


def point_tilt(scenario: lab.LabScenario, overrides: dict) -> float:
    if "theta_nrad" in overrides:
        return overrides["theta_nrad"] * NRAD
    if "v_mv" in overrides:
        if scenario.piezo_slope is None:
            raise UsageError("v_mv needs a piezo slope (piezo_slope_nrad_per_mv or scenario file)")
        return scenario.piezo_slope * overrides["v_mv"] * MV
    raise UsageError("give the tilt with --set theta_nrad=... or --set v_mv=...")


def write_output(payload, out: Optional[str], fmt: str, columns=None) -> None:
    """``payload`` is a dict (one record) or a list of dicts (a table)."""
    if out is None:
        return
    if fmt == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        rows = payload if isinstance(payload, list) else [payload]
        columns = columns or list(rows[0].keys())
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
        text = buf.getvalue()
    Path(out).write_text(text)


def _cell(value):
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return ";".join(map(str, value))
    return value


def cmd_mmt(args, ov, scenario):
    setting = point_setting(scenario, ov)
    point = lab.evaluate_point(scenario.geometry, scenario.n_injected, setting, 0.0, scenario.efficiency)
    result = {
        "n_injected": scenario.n_injected,
        "postselection": 0.0 if setting is None else scenario.postselection,
        "mmt_bhd_rad": point.mmt_bhd,
        "mmt_sd_rad": point.mmt_sd,
    }
    print(f"MMT BHD: {point.mmt_bhd / NRAD:.4g} nrad")
    print(f"MMT SD:  {point.mmt_sd / NRAD:.4g} nrad")
    write_output(result, args.out, args.format)
    return EXIT_OK


def cmd_snr(args, ov, scenario):
    setting = point_setting(scenario, ov)
    theta = point_tilt(scenario, ov)
    point = lab.evaluate_point(scenario.geometry, scenario.n_injected, setting, theta, scenario.efficiency)
    result = {
        "theta_rad": theta,
        "n_injected": scenario.n_injected,
        "postselection": 0.0 if setting is None else scenario.postselection,
        "snr_bhd": point.snr_bhd,
        "snr_sd": point.snr_sd,
    }
    print(f"SNR BHD: {point.snr_bhd:.6g}")
    print(f"SNR SD:  {point.snr_sd:.6g}")
    write_output(result, args.out, args.format)
    return EXIT_OK


AXIS_UNITS = {"postselection": 1.0, "injected_photons": 1.0, "tilt": NRAD, "waist": UM}


def cmd_sweep(args, ov, scenario):
    axis = ov.get("axis", "postselection")
    if axis not in AXIS_UNITS:
        raise UsageError(f"axis must be one of {sorted(AXIS_UNITS)}")
    for key in ("start", "stop"):
        if key not in ov:
            raise UsageError(f"sweep needs --set {key}=... (axis units: P_m, photons, nrad or um)")
    points = int(ov.get("points", 50))
    spacing = ov.get("spacing", "linear")
    if spacing not in ("linear", "log"):
        raise UsageError("spacing must be linear or log")
    unit = AXIS_UNITS[axis]
    make = np.geomspace if spacing == "log" else np.linspace
    values = make(ov["start"] * unit, ov["stop"] * unit, points)
    theta = ov["theta_nrad"] * NRAD if "theta_nrad" in ov else None
    rows = lab.sweep(axis, values, scenario, mode=ov.get("mode"), theta=theta)
    table = [
        {"axis": r.axis, "snr_bhd": r.snr_bhd, "snr_sd": r.snr_sd, "mmt_bhd_rad": r.mmt_bhd, "mmt_sd_rad": r.mmt_sd}
        for r in rows
    ]
    print(f"sweep {axis}: {len(rows)} points")
    write_output(table, args.out, args.format, columns=lab.SWEEP_HEADER)
    return EXIT_OK


def cmd_reproduce(args, ov, scenario):
    report = reproduce.run_suite(args.suite, args.tolerance)
    print(report.text())
    if args.out:
        if args.format == "json":
            Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        else:
            report.write_csv(args.out)
    return EXIT_OK if report.passed else EXIT_REPRODUCTION


def cmd_montecarlo(args, ov, scenario):
    setting = scenario.setting
    theta = ov["theta_nrad"] * NRAD if "theta_nrad" in ov else (
        point_tilt(scenario, ov) if "v_mv" in ov else lab.ideal_mmt(scenario))
    kick = TiltKick.from_tilt(theta, scenario.geometry)
    config = shot_noise_mc.McConfig(
        trials=args.trials,
        seed=args.seed,
        model=_model(ov.get("model", "gaussian")),
        block_size=int(ov.get("block_size", shot_noise_mc.DEFAULT_BLOCK)),
        workers=int(ov.get("workers", 1)),
    )
    budget = PhotonBudget.from_setting(scenario.n_injected, setting, scenario.n_lo)
    scheme = ov.get("scheme", "bhd")
    if scheme == "bhd":
        outcome = shot_noise_mc.simulate_bhd(config, budget, setting, kick, scenario.geometry)
    elif scheme == "sd":
        outcome = shot_noise_mc.simulate_sd(config, budget, setting, kick, scenario.geometry)
    else:
        raise UsageError("scheme must be bhd or sd")
    summary = outcome.summary()
    print(f"{scheme} Monte Carlo: snr={outcome.snr:.6g} +/- {outcome.snr_stderr:.2g} ({outcome.trials} trials)")
    write_output(summary, args.out, args.format)
    return EXIT_OK


def _model(name: str) -> shot_noise_mc.PhotonModel:
    aliases = {"gaussian": shot_noise_mc.PhotonModel.GAUSSIAN, "poisson": shot_noise_mc.PhotonModel.POISSON}
    if name in aliases:
        return aliases[name]
    try:
        return shot_noise_mc.PhotonModel(name)
    except ValueError:
        raise UsageError(f"model must be gaussian or poisson, got {name!r}") from None


def cmd_calibrate(args, ov, scenario):
    if not args.records:
        raise UsageError("calibrate needs --records <csv>")
    records = lab.read_records(args.records)
    eta = lab.fit_efficiency(records, scenario)
    fit = lab.fit_piezo_calibration(records)
    result = {
        "efficiency": eta,
        "row_efficiencies": [float(e) for e in lab.row_efficiencies(records, scenario)],
        "piezo_slope_rad_per_v": fit.slope,
        "piezo_intercept_rad": fit.intercept,
        "piezo_slope_through_origin_rad_per_v": fit.slope_through_origin,
        "r_squared": fit.r_squared,
    }
    print(f"efficiency eta_a = {eta:.4f}")
    print(f"piezo slope = {fit.slope / (NRAD / MV):.4g} nrad/mV, r^2 = {fit.r_squared:.4f}")
    write_output(result, args.out, args.format)
    if args.dump_scenario:
        replace(scenario, efficiency=min(eta, 1.0), piezo_slope=fit.slope_through_origin).save(args.dump_scenario)
    return EXIT_OK


def cmd_optimize(args, ov, scenario):
    for key in ("max_p_in_uw", "max_p_out_uw", "min_p_out_uw"):
        if key not in ov:
            raise UsageError(f"optimize needs --set {key}=...")
    constraints = lab.MmtConstraints(
        max_p_in=ov["max_p_in_uw"] * UW,
        max_p_out=ov["max_p_out_uw"] * UW,
        min_p_out=ov["min_p_out_uw"] * UW,
        geometry=scenario.geometry,
        rbw=scenario.rbw,
        efficiency=scenario.efficiency,
        p_lo=scenario.p_lo,
    )
    best = lab.optimize_mmt(constraints)
    result = {
        "p_in_w": best.scenario.p_in,
        "p_out_w": best.scenario.p_out,
        "postselection": best.scenario.postselection,
        "theta_min_rad": best.theta_min,
        "binding": list(best.binding),
    }
    print(f"optimum: p_in={best.scenario.p_in / UW:.4g} uW, p_out={best.scenario.p_out / UW:.4g} uW, "
          f"MMT={best.theta_min / NRAD:.4g} nrad (binding: {', '.join(best.binding)})")
    write_output(result, args.out, args.format)
    if args.dump_scenario:
        best.scenario.save(args.dump_scenario)
    return EXIT_OK


COMMANDS = {
    "mmt": cmd_mmt,
    "snr": cmd_snr,
    "sweep": cmd_sweep,
    "reproduce": cmd_reproduce,
    "montecarlo": cmd_montecarlo,
    "calibrate": cmd_calibrate,
    "optimize": cmd_optimize,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file (SI units)")
    common.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE",
                        help="override a parameter in lab units, e.g. p_in_uw=1000")
    common.add_argument("--out", help="output file")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--dump-scenario", metavar="PATH", help="write the effective scenario as JSON")

    parser = argparse.ArgumentParser(prog="wvtilt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("mmt", parents=[common], help="minimum measurable tilt, BHD and SD")
    sub.add_parser("snr", parents=[common], help="SNR at one tilt, BHD and SD")
    sub.add_parser("sweep", parents=[common], help="sweep one parameter")
    rep = sub.add_parser("reproduce", parents=[common], help="run a reproduction suite")
    rep.add_argument("suite", choices=sorted(reproduce.SUITES))
    rep.add_argument("--tolerance", type=float, help="override relative tolerances")
    mc = sub.add_parser("montecarlo", parents=[common], help="Monte Carlo shot-noise oracle")
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--trials", type=int, default=100_000)
    cal = sub.add_parser("calibrate", parents=[common], help="fit efficiency and piezo slope")
    cal.add_argument("--records", help="CSV with header p_in_uw,p_out_uw,v_mv,theta_min_nrad")
    sub.add_parser("optimize", parents=[common], help="optimize the MMT under power constraints")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    for name, default in (("tolerance", None), ("seed", 0), ("trials", 0), ("records", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        overrides = parse_overrides(args.overrides, args.command)
        scenario = build_scenario(args.scenario, overrides)
        if args.dump_scenario and args.command not in ("calibrate", "optimize"):
            scenario.save(args.dump_scenario)
        return COMMANDS[args.command](args, overrides, scenario)
    except (UsageError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
