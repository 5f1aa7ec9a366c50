"""Bridge from the ideal formulas to bench numbers.

Optical powers become photon numbers per measurement window T = 1/RBW,
using h c / wavelength with the exact SI values of h and c
(h = 6.62607015e-34 J s, c = 299792458 m/s). Real-world losses are lumped
into one amplitude efficiency eta, applied as theta_measured = theta_ideal / eta
(equivalently SNR_measured = eta**2 SNR_ideal).

The reference bench data ships as ``data/table1.csv``. Its MMT column
follows 1/sqrt(P_in) to better than 0.2 %, so it is unclear whether the rows
were measured independently or scaled from the 1000 uW point; the
calculations here work either way.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import constants, stats

from . import detection
from .errors import DegenerateFit, Infeasible, InsufficientData
from .hg_modes import BeamGeometry
from .weak_measurement import InterferometerSetting, TiltKick

PLANCK = constants.h
LIGHT_SPEED = constants.c

RECORD_HEADER = ["p_in_uw", "p_out_uw", "v_mv", "theta_min_nrad"]
SWEEP_HEADER = ["axis", "snr_bhd", "snr_sd", "mmt_bhd_rad", "mmt_sd_rad"]
SCENARIO_KEYS = {
    "wavelength_m",
    "waist_m",
    "p_in_w",
    "p_out_w",
    "p_lo_w",
    "rbw_hz",
    "analysis_frequency_hz",
    "efficiency",
    "piezo_slope_rad_per_v",
}

# reference bench operating point; the efficiency default is what the 1000 uW row implies.
TABLE1_EFFICIENCY = 0.516


def photons_from_power(power: float, wavelength: float, rbw: float) -> float:
    """Mean photon number carried by ``power`` (W) during one window 1/``rbw`` (s)."""
    if power < 0 or wavelength <= 0 or rbw <= 0:
        raise ValueError("power must be >= 0, wavelength and rbw > 0")
    return power * wavelength / (rbw * PLANCK * LIGHT_SPEED)


def power_from_photons(photons: float, wavelength: float, rbw: float) -> float:
    return photons * rbw * PLANCK * LIGHT_SPEED / wavelength


@dataclass(frozen=True)
class LabScenario:
    geometry: BeamGeometry
    p_in: float
    p_out: float
    p_lo: float = 1e-3
    rbw: float = 10e3
    analysis_frequency: float = 2e6
    efficiency: float = 1.0
    piezo_slope: Optional[float] = None  # rad/V

    def __post_init__(self):
        if not (0 < self.p_out <= self.p_in):
            raise ValueError(f"need 0 < p_out <= p_in, got p_out={self.p_out!r}, p_in={self.p_in!r}")
        if not math.isfinite(self.p_in):
            raise ValueError("p_in must be finite")
        if self.rbw <= 0:
            raise ValueError("rbw must be positive")
        if not (0 < self.efficiency <= 1):
            raise ValueError("efficiency must lie in (0, 1]")
        if self.p_lo <= 0:
            raise ValueError("p_lo must be positive")

    @property
    def postselection(self) -> float:
        return self.p_out / self.p_in

    @property
    def setting(self) -> InterferometerSetting:
        return InterferometerSetting.from_postselection(self.postselection)

    @property
    def n_injected(self) -> float:
        return photons_from_power(self.p_in, self.geometry.wavelength, self.rbw)

    @property
    def n_signal(self) -> float:
        return photons_from_power(self.p_out, self.geometry.wavelength, self.rbw)

    @property
    def n_lo(self) -> float:
        return photons_from_power(self.p_lo, self.geometry.wavelength, self.rbw)

    def to_dict(self) -> dict:
        return {
            "wavelength_m": self.geometry.wavelength,
            "waist_m": self.geometry.waist,
            "p_in_w": self.p_in,
            "p_out_w": self.p_out,
            "p_lo_w": self.p_lo,
            "rbw_hz": self.rbw,
            "analysis_frequency_hz": self.analysis_frequency,
            "efficiency": self.efficiency,
            "piezo_slope_rad_per_v": self.piezo_slope,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LabScenario":
        unknown = set(data) - SCENARIO_KEYS
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        missing = {"wavelength_m", "waist_m", "p_in_w", "p_out_w"} - set(data)
        if missing:
            raise ValueError(f"missing scenario keys: {sorted(missing)}")
        kwargs = {}
        for key, attr in [
            ("p_lo_w", "p_lo"),
            ("rbw_hz", "rbw"),
            ("analysis_frequency_hz", "analysis_frequency"),
            ("efficiency", "efficiency"),
            ("piezo_slope_rad_per_v", "piezo_slope"),
        ]:
            if data.get(key) is not None:
                kwargs[attr] = float(data[key])
        return cls(
            BeamGeometry(float(data["wavelength_m"]), float(data["waist_m"])),
            float(data["p_in_w"]),
            float(data["p_out_w"]),
            **kwargs,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LabScenario":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "LabScenario":
        return cls.from_json(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def table1_scenario(**changes) -> LabScenario:
    """The 1000 uW / 33 uW reference bench operating point at 1064 nm, 60 um waist, RBW 10 kHz."""
    base = LabScenario(
        BeamGeometry(1064e-9, 60e-6), p_in=1000e-6, p_out=33e-6, p_lo=1e-3, rbw=10e3,
        efficiency=TABLE1_EFFICIENCY,
    )
    return replace(base, **changes)


@dataclass(frozen=True)
class MeasurementRecord:
    """One bench point in SI units (W, V, rad)."""

    p_in: float
    p_out: float
    drive_voltage: float
    theta_min: float
    snr: Optional[float] = None

    def __post_init__(self):
        if not self.theta_min > 0:
            raise ValueError("theta_min must be positive")


def read_records(path) -> list[MeasurementRecord]:
    with open(path, newline="") as fh:
        return _parse_records(fh)


def _parse_records(lines: Iterable[str]) -> list[MeasurementRecord]:
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != RECORD_HEADER:
        raise ValueError(f"record table header must be {','.join(RECORD_HEADER)}")
    return [
        MeasurementRecord(
            float(row["p_in_uw"]) * 1e-6,
            float(row["p_out_uw"]) * 1e-6,
            float(row["v_mv"]) * 1e-3,
            float(row["theta_min_nrad"]) * 1e-9,
        )
        for row in reader
    ]


def write_records(records: Sequence[MeasurementRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_HEADER)
        for r in records:
            writer.writerow([
                f"{r.p_in * 1e6:.12g}",
                f"{r.p_out * 1e6:.12g}",
                f"{r.drive_voltage * 1e3:.12g}",
                f"{r.theta_min * 1e9:.12g}",
            ])


def load_table1() -> list[MeasurementRecord]:
    text = resources.files("wvtilt").joinpath("data/table1.csv").read_text()
    return _parse_records(text.splitlines())


def ideal_mmt(scenario: LabScenario) -> float:
    return detection.mmt_bhd(scenario.n_injected, scenario.setting, scenario.geometry)


def predict_scenario(scenario: LabScenario, drive_voltage: Optional[float] = None) -> MeasurementRecord:
    """Predicted measured MMT (and SNR at ``drive_voltage`` when a piezo slope is known)."""
    theta_min = ideal_mmt(scenario) / scenario.efficiency
    snr = None
    if drive_voltage is not None:
        if scenario.piezo_slope is None:
            raise ValueError("scenario has no piezo_slope; cannot convert voltage to tilt")
        kick = TiltKick.from_tilt(scenario.piezo_slope * drive_voltage, scenario.geometry)
        snr = scenario.efficiency**2 * detection.snr_bhd(
            scenario.n_injected, scenario.setting, kick, scenario.geometry
        )
    return MeasurementRecord(
        scenario.p_in, scenario.p_out, math.nan if drive_voltage is None else drive_voltage, theta_min, snr
    )


def _scenario_for(record: MeasurementRecord, scenario: LabScenario) -> LabScenario:
    return replace(scenario, p_in=record.p_in, p_out=record.p_out)


def table1_scaling_check(
    records: Sequence[MeasurementRecord], reference: Optional[MeasurementRecord] = None
) -> np.ndarray:
    """Relative deviation of each row from theta_ref sqrt(P_ref / P_in).

    The reference defaults to the highest-power record.
    """
    if len(records) < 2:
        raise InsufficientData("need at least two records to check power scaling")
    if reference is None:
        reference = max(records, key=lambda r: r.p_in)
    predicted = np.array([reference.theta_min * math.sqrt(reference.p_in / r.p_in) for r in records])
    measured = np.array([r.theta_min for r in records])
    return measured / predicted - 1.0


@dataclass(frozen=True)
class PiezoFit:
    slope: float  # rad/V
    intercept: float  # rad
    r_squared: float
    slope_through_origin: float  # rad/V, zero-intercept least squares


def fit_piezo_calibration(records: Sequence[MeasurementRecord]) -> PiezoFit:
    """Least-squares line theta_min = slope * V + intercept."""
    if len(records) < 2:
        raise InsufficientData("need at least two records")
    v = np.array([r.drive_voltage for r in records])
    theta = np.array([r.theta_min for r in records])
    if np.ptp(v) == 0:
        raise DegenerateFit("all drive voltages are equal")
    fit = stats.linregress(v, theta)
    origin = float(np.dot(v, theta) / np.dot(v, v))
    return PiezoFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2), origin)


def row_efficiencies(records: Sequence[MeasurementRecord], scenario: LabScenario) -> np.ndarray:
    """Ideal over measured MMT for each record, using the scenario's geometry and RBW."""
    return np.array(
        [ideal_mmt(_scenario_for(r, scenario)) / r.theta_min for r in records]
    )


def fit_efficiency(records: Sequence[MeasurementRecord], scenario: LabScenario) -> float:
    """Geometric mean of the per-row amplitude efficiencies."""
    if not records:
        raise InsufficientData("need at least one record")
    return float(np.exp(np.mean(np.log(row_efficiencies(records, scenario)))))


class SweepAxis(str, enum.Enum):
    POSTSELECTION = "postselection"
    INJECTED_PHOTONS = "injected_photons"
    TILT = "tilt"
    WAIST = "waist"


class SweepMode(str, enum.Enum):
    FIXED_INPUT = "fixed_input"  # N held, P_m varies
    FIXED_OUTPUT = "fixed_output"  # N' held, N or P_m varies
    FIXED_POSTSELECTION = "fixed_postselection"


@dataclass(frozen=True)
class PointEvaluation:
    snr_bhd: float
    snr_sd: float
    mmt_bhd: float
    mmt_sd: float


def evaluate_point(
    geometry: BeamGeometry,
    n_injected: float,
    setting: Optional[InterferometerSetting],
    theta: float,
    efficiency: float = 1.0,
) -> PointEvaluation:
    """Both schemes at one operating point; ``setting=None`` is the dark limit."""
    kick = TiltKick.from_tilt(theta, geometry)
    eta2 = efficiency**2
    return PointEvaluation(
        eta2 * detection.snr_bhd(n_injected, setting, kick, geometry),
        eta2 * detection.snr_sd(n_injected, setting, kick, geometry),
        detection.mmt_bhd(n_injected, setting, geometry) / efficiency,
        detection.mmt_sd(n_injected, setting, geometry) / efficiency,
    )


@dataclass(frozen=True)
class SweepRow:
    axis: float
    snr_bhd: float
    snr_sd: float
    mmt_bhd: float
    mmt_sd: float


def _check_range(values: np.ndarray) -> None:
    if values.size == 0:
        raise ValueError("sweep range is empty")
    steps = np.diff(values)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("sweep range must be strictly monotone")


def sweep(
    axis,
    values,
    fixed: LabScenario,
    mode=None,
    theta: Optional[float] = None,
) -> list[SweepRow]:
    """Evaluate both detection schemes along one axis.

    ``values`` are post-selection probabilities, injected photon numbers,
    tilts (rad) or waists (m) depending on ``axis``. ``mode`` chooses what is
    held fixed when ``axis`` is postselection or injected_photons: the injected
    power (default for postselection), the detected power N', or
    the post-selection probability (default for injected_photons). SNRs are
    evaluated at tilt ``theta``, by default the fixed scenario's predicted MMT.
    """
    axis = SweepAxis(axis)
    values = np.atleast_1d(np.asarray(values, dtype=float))
    _check_range(values)
    if mode is None:
        mode = SweepMode.FIXED_POSTSELECTION if axis is SweepAxis.INJECTED_PHOTONS else SweepMode.FIXED_INPUT
    mode = SweepMode(mode)
    if theta is None:
        theta = predict_scenario(fixed).theta_min

    geometry = fixed.geometry
    rows = []
    for value in values:
        n, p_m, geom, tilt = fixed.n_injected, fixed.postselection, geometry, theta
        if axis is SweepAxis.POSTSELECTION:
            p_m = value
            if mode is SweepMode.FIXED_OUTPUT:
                n = fixed.n_signal / p_m
            elif mode is SweepMode.FIXED_POSTSELECTION:
                raise ValueError("a postselection sweep cannot hold the post-selection fixed")
        elif axis is SweepAxis.INJECTED_PHOTONS:
            n = value
            if mode is SweepMode.FIXED_OUTPUT:
                p_m = fixed.n_signal / n
                if p_m > 1:
                    raise ValueError("injected photon number below the fixed detected number")
            elif mode is SweepMode.FIXED_INPUT:
                raise ValueError("an injected-photon sweep cannot hold the input fixed")
        elif axis is SweepAxis.TILT:
            tilt = value
        else:
            geom = BeamGeometry(geometry.wavelength, value)
        point = evaluate_point(
            geom, n, InterferometerSetting.from_postselection(p_m), tilt, fixed.efficiency
        )
        rows.append(SweepRow(
            float(value), float(point.snr_bhd), float(point.snr_sd), float(point.mmt_bhd), float(point.mmt_sd)
        ))
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for r in rows:
            writer.writerow([repr(float(v)) for v in (r.axis, r.snr_bhd, r.snr_sd, r.mmt_bhd, r.mmt_sd)])


@dataclass(frozen=True)
class MmtConstraints:
    max_p_in: float  # W
    max_p_out: float  # detector saturation, W
    min_p_out: float  # detection floor, W
    geometry: BeamGeometry
    rbw: float = 10e3
    efficiency: float = 1.0
    p_lo: float = 1e-3

    def __post_init__(self):
        for name in ("max_p_in", "max_p_out", "min_p_out"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a finite positive power, got {value!r}")


@dataclass(frozen=True)
class MmtOptimum:
    scenario: LabScenario
    theta_min: float
    binding: tuple[str, ...]


def optimize_mmt(constraints: MmtConstraints) -> MmtOptimum:
    """Smallest predicted MMT subject to p_in <= cap and floor <= p_out <= saturation.

    theta_min falls with p_in and rises with P_m, so the optimum sits at the
    p_in cap with the output at the detection floor.
    """
    c = constraints
    if c.max_p_out < c.min_p_out:
        raise Infeasible("saturation cap lies below the detection floor")
    if c.min_p_out > c.max_p_in:
        raise Infeasible("detection floor exceeds the largest allowed input power")
    scenario = LabScenario(
        c.geometry, p_in=c.max_p_in, p_out=c.min_p_out, p_lo=c.p_lo, rbw=c.rbw, efficiency=c.efficiency
    )
    binding = ("max_p_in", "min_p_out")
    return MmtOptimum(scenario, predict_scenario(scenario).theta_min, binding)
