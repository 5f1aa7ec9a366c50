"""Closed-form shot-noise-limited detection models.

Balanced homodyne detection (BHD) with a TEM10 local oscillator and split
detection (SD) of the Sagnac dark port. All quantities are ideal: electronic
noise and losses are handled by the lumped efficiency in ``lab_experiment``.

A ``setting`` of ``None`` denotes the fully dark limit phi -> 0, where the
formulas are evaluated through cos(phi/2) -> 1 rather than through the weak
value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

from .errors import DivergentMMT, InfeasiblePostselection, LocalOscillatorWarning
from .hg_modes import BeamGeometry
from .weak_measurement import InterferometerSetting, TiltKick, weak_value

SD_SNR_FACTOR = 2.0 / math.pi
SD_MMT_FACTOR = math.sqrt(math.pi / 2.0)
LO_DOMINANCE = 100.0


@dataclass(frozen=True)
class PhotonBudget:
    """Mean photon numbers per measurement window."""

    n_injected: float
    n_signal: float
    n_lo: float
    n_conventional: Optional[float] = None
    n_saturation: Optional[float] = None

    def __post_init__(self):
        if self.n_injected <= 0:
            raise ValueError("n_injected must be positive")
        if not (0 <= self.n_signal <= self.n_injected * (1 + 1e-12)):
            raise ValueError("n_signal must lie in [0, n_injected]")
        if self.n_lo <= 0:
            raise ValueError("n_lo must be positive")
        if self.n_saturation is not None and self.n_saturation <= 0:
            raise ValueError("n_saturation must be positive")
        if self.n_lo < LO_DOMINANCE * self.n_signal:
            warnings.warn(
                f"local oscillator ({self.n_lo:.3g} photons) is less than {LO_DOMINANCE:g}x "
                f"the signal ({self.n_signal:.3g} photons)",
                LocalOscillatorWarning,
                stacklevel=3,
            )

    @classmethod
    def from_setting(
        cls,
        n_injected: float,
        setting: InterferometerSetting,
        n_lo: float,
        n_conventional: Optional[float] = None,
        n_saturation: Optional[float] = None,
    ) -> "PhotonBudget":
        return cls(
            n_injected,
            n_injected * setting.postselection_probability,
            n_lo,
            n_conventional,
            n_saturation,
        )


@dataclass(frozen=True)
class NoiseQuadrature:
    """Vacuum-normalized quadrature noise variance (1 for coherent light)."""

    variance: float = 1.0

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("noise variance must be positive")


COHERENT = NoiseQuadrature(1.0)


@dataclass(frozen=True)
class DetectionOutcome:
    signal_mean: float
    noise_variance: float
    snr: float
    lo_gain: float = 1.0

    @classmethod
    def from_signal(cls, signal_mean: float, noise_variance: float, lo_gain: float = 1.0):
        return cls(signal_mean, noise_variance, signal_mean**2 / noise_variance, lo_gain)


def half_cos(setting: Optional[InterferometerSetting]) -> float:
    return 1.0 if setting is None else math.cos(setting.phi / 2.0)


def bhd_outcome(
    budget: PhotonBudget,
    setting: InterferometerSetting,
    kick: TiltKick,
    geometry: BeamGeometry,
    noise: NoiseQuadrature = COHERENT,
) -> DetectionOutcome:
    """Difference photocurrent of the TEM10 homodyne, in units of sqrt(N_LO).

    signal = 2 sqrt(N') |A_w| k w0 over noise ``noise.variance``; the common
    sqrt(N_LO) gain is reported as ``lo_gain`` and cancels in the SNR.
    """
    a_w = abs(weak_value(setting))
    signal = 2.0 * math.sqrt(budget.n_signal) * a_w * kick.k * geometry.waist
    return DetectionOutcome.from_signal(signal, noise.variance, math.sqrt(budget.n_lo))


def snr_bhd(
    n_injected: float,
    setting: Optional[InterferometerSetting],
    kick: TiltKick,
    geometry: BeamGeometry,
) -> float:
    """Coherent-light BHD SNR, (2 sqrt(N) cos(phi/2) k w0)^2."""
    return (2.0 * math.sqrt(n_injected) * half_cos(setting) * kick.k * geometry.waist) ** 2


def snr_sd(
    n_injected: float,
    setting: Optional[InterferometerSetting],
    kick: TiltKick,
    geometry: BeamGeometry,
) -> float:
    return SD_SNR_FACTOR * snr_bhd(n_injected, setting, kick, geometry)


def mmt_bhd(n_injected: float, setting: Optional[InterferometerSetting], geometry: BeamGeometry) -> float:
    """Tilt (rad) at which the BHD SNR equals one."""
    if n_injected <= 0:
        raise ValueError("n_injected must be positive")
    c = half_cos(setting)
    if c <= 1e-15:
        raise DivergentMMT("cos(phi/2) = 0: the bright port carries no tilt signal")
    return geometry.wavelength / (4.0 * math.pi * geometry.waist * math.sqrt(n_injected) * c)


def mmt_sd(n_injected: float, setting: Optional[InterferometerSetting], geometry: BeamGeometry) -> float:
    return SD_MMT_FACTOR * mmt_bhd(n_injected, setting, geometry)


@dataclass(frozen=True)
class SaturationGain:
    gain: float
    postselection: float  # post-selection probability actually used
    constrained: bool  # True when the requested P_m would saturate the detector


def saturation_gain(
    n_injected: float,
    n_saturation: float,
    postselection: Optional[float] = None,
    floor: float = 1e-300,
) -> SaturationGain:
    """SNR advantage of weak-value BHD over a conventional detector capped at ``n_saturation``.

    The weak-value scheme detects N P_m <= N_sat photons but its SNR scales as
    N (1 - P_m); the conventional scheme detects at most N'' = min(N, N_sat).
    ``postselection=None`` takes the dark limit P_m -> 0. A requested P_m that
    would exceed the saturation cap is lowered to N_sat / N and flagged.
    """
    if n_saturation <= 0:
        raise ValueError("n_saturation must be positive")
    if n_injected <= 0:
        raise ValueError("n_injected must be positive")
    p_max = min(1.0, n_saturation / n_injected)
    if not p_max > floor:
        raise InfeasiblePostselection(
            f"no post-selection probability above {floor:g} keeps N P_m <= N_sat"
        )
    p_m = 0.0 if postselection is None else postselection
    constrained = p_m > p_max
    if constrained:
        p_m = p_max
    n_conventional = min(n_injected, n_saturation)
    return SaturationGain(n_injected * (1.0 - p_m) / n_conventional, p_m, constrained)
