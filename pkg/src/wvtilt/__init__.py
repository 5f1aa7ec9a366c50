"""Weak-value-amplified small-tilt measurement: mode math, detection models,
Monte Carlo shot-noise oracle and lab-data reproduction."""

from .errors import (
    DegenerateFit,
    DivergentMMT,
    GridTooNarrow,
    Infeasible,
    InfeasiblePostselection,
    InsufficientData,
    NonUniformGrid,
    SingularPhase,
    WvaError,
)
from .hg_modes import BeamGeometry, ModeCoefficients, SampledField
from .weak_measurement import InterferometerSetting, TiltKick

__version__ = "0.1.0"

__all__ = [
    "BeamGeometry",
    "DegenerateFit",
    "DivergentMMT",
    "GridTooNarrow",
    "Infeasible",
    "InfeasiblePostselection",
    "InsufficientData",
    "InterferometerSetting",
    "ModeCoefficients",
    "NonUniformGrid",
    "SampledField",
    "SingularPhase",
    "TiltKick",
    "WvaError",
]
