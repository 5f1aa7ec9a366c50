"""Sagnac weak-value pipeline: pre-selection, tilt interaction, post-selection.

Path basis: index 0 is the clockwise path |+>, index 1 the counterclockwise
path |->. The path operator is A = |+><+| - |-><-|, so the tilt interaction
exp(-i A k x) gives the two paths opposite kicks -k and +k. Projecting on the
dark-port state |f> = (|+> - |->)/sqrt(2) then leaves

    E(x) = -i sin(phi/2 + k x) psi_0(x)

whose first-order expansion is psi_0 + cot(phi/2) (k w0 / 2) psi_1 up to the
factor sin(phi/2). Global phases are dropped throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SingularPhase, WeakRegimeWarning
from .hg_modes import (
    BeamGeometry,
    ModeCoefficients,
    SampledField,
    check_span,
    default_grid,
    mode_amplitude,
)

PHASE_FLOOR = 1e-9
WEAKNESS_LIMIT = 0.1

PATH_OPERATOR = np.diag([1.0, -1.0]).astype(complex)
FINAL_STATE = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)


@dataclass(frozen=True)
class InterferometerSetting:
    """Relative phase ``phi`` (rad) between the clockwise and counterclockwise paths."""

    phi: float

    def __post_init__(self):
        if not (0.0 < self.phi <= math.pi):
            raise ValueError(f"phi must lie in (0, pi], got {self.phi!r}")

    @classmethod
    def from_postselection(cls, probability: float) -> "InterferometerSetting":
        if not (0.0 < probability <= 1.0):
            raise ValueError(f"post-selection probability must lie in (0, 1], got {probability!r}")
        return cls(2.0 * math.asin(math.sqrt(probability)))

    @classmethod
    def from_powers(cls, p_out: float, p_in: float) -> "InterferometerSetting":
        return cls.from_postselection(p_out / p_in)

    @property
    def postselection_probability(self) -> float:
        return math.sin(self.phi / 2.0) ** 2


@dataclass(frozen=True)
class TiltKick:
    """Beam tilt ``theta`` (rad) and the matching transverse kick ``k = 2 pi theta / wavelength``."""

    theta: float
    k: float
    wavelength: float

    def __post_init__(self):
        # absolute floor only matters for subnormal kicks
        if not math.isclose(self.k, 2.0 * math.pi * self.theta / self.wavelength, rel_tol=1e-12, abs_tol=1e-290):
            raise ValueError("k and theta are inconsistent for the given wavelength")

    @classmethod
    def from_tilt(cls, theta: float, geometry: BeamGeometry) -> "TiltKick":
        return cls(theta, 2.0 * math.pi * theta / geometry.wavelength, geometry.wavelength)

    @classmethod
    def from_kick(cls, k: float, geometry: BeamGeometry) -> "TiltKick":
        return cls(k * geometry.wavelength / (2.0 * math.pi), k, geometry.wavelength)

    @classmethod
    def from_normalized(cls, k_waist: float, geometry: BeamGeometry) -> "TiltKick":
        """Build from the dimensionless product k * w0."""
        return cls.from_kick(k_waist / geometry.waist, geometry)


@dataclass(frozen=True)
class SystemState:
    amp_plus: complex
    amp_minus: complex

    def __post_init__(self):
        norm = abs(self.amp_plus) ** 2 + abs(self.amp_minus) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"path state is not normalized (|psi|^2 = {norm!r})")

    def vector(self) -> np.ndarray:
        return np.array([self.amp_plus, self.amp_minus], dtype=complex)


@dataclass(frozen=True)
class WeakInteraction:
    """Impulsive interaction lambda g(t) A k x with unit-area g(t); ``coupling`` is the net kick k."""

    coupling: float

    @classmethod
    def from_kick(cls, kick: TiltKick) -> "WeakInteraction":
        return cls(kick.k)

    def path_kicks(self) -> tuple[float, float]:
        """Kicks picked up by the |+> and |-> paths (the pointer phase is exp(-i k_path x))."""
        return tuple(float(self.coupling * a) for a in np.diag(PATH_OPERATOR).real)


def _inner(bra: np.ndarray, ket: np.ndarray) -> complex:
    # plain complex arithmetic: BLAS dot may fuse operations and leave a spurious real part
    return sum(complex(b).conjugate() * complex(k) for b, k in zip(bra, ket))


def preselect(setting: InterferometerSetting) -> SystemState:
    half = setting.phi / 2.0
    return SystemState(
        complex(np.exp(-1j * half)) / math.sqrt(2.0),
        complex(np.exp(1j * half)) / math.sqrt(2.0),
    )


def weak_value(setting: InterferometerSetting, phase_floor: float = PHASE_FLOOR) -> complex:
    """A_w = <f|A|i> / <f|i>; equals i cot(phi/2)."""
    if setting.phi < phase_floor:
        raise SingularPhase(f"phi = {setting.phi:g} rad is below the floor {phase_floor:g} rad")
    initial = preselect(setting).vector()
    overlap = _inner(FINAL_STATE, initial)
    return _inner(FINAL_STATE, PATH_OPERATOR @ initial) / overlap


def postselection_probability(setting: InterferometerSetting) -> float:
    """|<f|i>|^2, i.e. sin^2(phi/2)."""
    return abs(_inner(FINAL_STATE, preselect(setting).vector())) ** 2


def weakness(setting: InterferometerSetting, kick: TiltKick, geometry: BeamGeometry) -> float:
    """|A_w| k w0 / 2, the size of the first-order correction relative to psi_0."""
    return abs(kick.k) * geometry.waist / (2.0 * math.tan(setting.phi / 2.0))


@dataclass(frozen=True)
class DarkPortField:
    field: SampledField  # normalized to unit power
    probability: float  # exact post-selection probability (norm^2 before normalizing)
    weak_regime: bool


def dark_port_amplitude(x, setting: InterferometerSetting, kick: TiltKick, geometry: BeamGeometry):
    """Unnormalized dark-port field sin(phi/2 + k x) psi_0(x), global phase dropped."""
    x = np.asarray(x, dtype=float)
    return np.sin(setting.phi / 2.0 + kick.k * x) * mode_amplitude(0, x, geometry)


def dark_port_field(
    setting: InterferometerSetting,
    kick: TiltKick,
    geometry: BeamGeometry,
    grid=None,
    weakness_limit: float = WEAKNESS_LIMIT,
) -> DarkPortField:
    """Exact dark-port field, without truncating the interaction exponential."""
    grid = default_grid(geometry) if grid is None else np.asarray(grid, dtype=float)
    raw = SampledField(grid, dark_port_amplitude(grid, setting, kick, geometry))
    check_span(raw.grid, geometry)
    probability = raw.norm_squared()
    return DarkPortField(
        raw.normalized(),
        probability,
        weakness(setting, kick, geometry) < weakness_limit,
    )


def pointer_firstorder(
    setting: InterferometerSetting,
    kick: TiltKick,
    geometry: BeamGeometry,
    weakness_limit: float = WEAKNESS_LIMIT,
) -> ModeCoefficients:
    """Normalized first-order pointer psi_0 - i (w0 A_w k / 2) psi_1 as (c_0, c_1)."""
    a_w = weak_value(setting)
    c1 = -1j * geometry.waist * a_w * kick.k / 2.0
    if abs(c1) >= weakness_limit:
        warnings.warn(
            f"weakness |A_w| k w0 / 2 = {abs(c1):.3g} exceeds {weakness_limit:g}; "
            "first-order pointer is unreliable",
            WeakRegimeWarning,
            stacklevel=2,
        )
    coeffs = np.array([1.0, c1], dtype=complex)
    return ModeCoefficients(coeffs / np.linalg.norm(coeffs), 0.0)


@dataclass(frozen=True)
class AmplifiedShift:
    shift: float  # |A_w| k w0^2 / 2, meters
    amplification: float  # |A_w|


def amplified_shift(setting: InterferometerSetting, kick: TiltKick, geometry: BeamGeometry) -> AmplifiedShift:
    amplification = abs(weak_value(setting))
    return AmplifiedShift(amplification * kick.k * geometry.waist**2 / 2.0, amplification)
