"""One-dimensional Hermite-Gauss modes, overlaps and field decomposition.

Modes are normalized so that the integral of psi_n(x)**2 over the real line
is one:

    psi_n(x) = (2 / (pi w0**2))**(1/4) / sqrt(2**n n!) * H_n(sqrt(2) x / w0) * exp(-x**2 / w0**2)

with ``w0`` the TEM00 amplitude waist (1/e field radius).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .errors import GridTooNarrow, NonUniformGrid

#: Decomposition grids must cover at least this many waists on each side.
MIN_SPAN_WAISTS = 5.0
DEFAULT_SPAN_WAISTS = 6.0
DEFAULT_POINTS = 2001


@dataclass(frozen=True)
class BeamGeometry:
    """Wavelength and TEM00 waist, both in meters."""

    wavelength: float
    waist: float

    def __post_init__(self):
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ValueError(f"wavelength must be positive, got {self.wavelength!r}")
        if not (self.waist > 0 and math.isfinite(self.waist)):
            raise ValueError(f"waist must be positive, got {self.waist!r}")

    @property
    def nonparaxial(self) -> bool:
        """True when the waist is under ten wavelengths (paraxial modes become questionable)."""
        return self.waist < 10 * self.wavelength

    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength


@dataclass(frozen=True)
class SampledField:
    """Complex field samples on a uniform transverse grid (meters)."""

    grid: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        samples = np.asarray(self.samples, dtype=complex)
        if grid.ndim != 1 or grid.shape != samples.shape:
            raise ValueError("grid and samples must be 1-D arrays of equal length")
        if grid.size < 3:
            raise NonUniformGrid("need at least three grid points")
        check_uniform(grid)
        grid.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "samples", samples)

    @property
    def spacing(self) -> float:
        return (self.grid[-1] - self.grid[0]) / (self.grid.size - 1)

    def norm_squared(self) -> float:
        return float(simpson(np.abs(self.samples) ** 2, x=self.grid))

    def normalized(self) -> "SampledField":
        return SampledField(self.grid, self.samples / math.sqrt(self.norm_squared()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x_m", "re", "im"])
            for x, s in zip(self.grid, self.samples):
                writer.writerow([repr(float(x)), repr(float(s.real)), repr(float(s.imag))])

    @classmethod
    def from_csv(cls, path) -> "SampledField":
        with open(Path(path), newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["x_m", "re", "im"]:
                raise ValueError(f"{path}: expected header 'x_m,re,im', got {header!r}")
            rows = [tuple(map(float, row)) for row in reader if row]
        data = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2])


@dataclass(frozen=True)
class ModeCoefficients:
    """Complex amplitudes c_0..c_max_order plus the power left in truncated orders."""

    coeffs: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coeffs must be a non-empty 1-D sequence")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def max_order(self) -> int:
        return self.coeffs.size - 1

    def __getitem__(self, n: int) -> complex:
        return complex(self.coeffs[n])

    def power(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))


def check_uniform(grid: np.ndarray) -> None:
    grid = np.asarray(grid, dtype=float)
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise NonUniformGrid("grid must be strictly increasing")
    ideal = np.linspace(grid[0], grid[-1], grid.size)
    scale = max(abs(grid[0]), abs(grid[-1]))
    if np.max(np.abs(grid - ideal)) > 1e-12 * scale:
        raise NonUniformGrid("grid spacing is not uniform to 1e-12 relative tolerance")


def check_span(grid: np.ndarray, geometry: BeamGeometry) -> None:
    # small slack so that an exact linspace(-5w, 5w) passes despite rounding
    limit = MIN_SPAN_WAISTS * geometry.waist * (1 - 1e-12)
    if grid[0] > -limit or grid[-1] < limit:
        raise GridTooNarrow(
            f"grid [{grid[0]:.3e}, {grid[-1]:.3e}] m does not span +/-{MIN_SPAN_WAISTS:g} waists "
            f"({MIN_SPAN_WAISTS * geometry.waist:.3e} m)"
        )


def default_grid(
    geometry: BeamGeometry, points: int = DEFAULT_POINTS, span: float = DEFAULT_SPAN_WAISTS
) -> np.ndarray:
    """Symmetric uniform grid over +/- ``span`` waists; ``points`` is forced odd so x = 0 is a node."""
    if points % 2 == 0:
        points += 1
    return np.linspace(-span * geometry.waist, span * geometry.waist, points)


def hermite_poly(n: int, u):
    """Physicists' Hermite polynomial H_n(u) by upward recurrence.

    Values stay finite for n <= 30 and |u| <= 20.
    """
    if n < 0:
        raise ValueError(f"order must be non-negative, got {n}")
    u = np.asarray(u, dtype=float)
    h_prev = np.ones_like(u)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * u
    for m in range(1, n):
        h_prev, h = h, 2.0 * u * h - 2.0 * m * h_prev
    return h if h.ndim else float(h)


def mode_amplitude(n: int, x, geometry: BeamGeometry):
    """Normalized HG mode psi_n at transverse position(s) ``x`` (units m**-1/2)."""
    if n < 0:
        raise ValueError(f"order must be non-negative, got {n}")
    w0 = geometry.waist
    x = np.asarray(x, dtype=float)
    prefactor = (2.0 / (np.pi * w0**2)) ** 0.25 / math.sqrt(2.0**n * math.factorial(n))
    out = prefactor * hermite_poly(n, np.sqrt(2.0) * x / w0) * np.exp(-(x**2) / w0**2)
    return out if np.ndim(out) else float(out)


def sample_mode(n: int, geometry: BeamGeometry, grid=None) -> SampledField:
    grid = default_grid(geometry) if grid is None else np.asarray(grid, dtype=float)
    return SampledField(grid, mode_amplitude(n, grid, geometry))


def _project(grid: np.ndarray, samples: np.ndarray, max_order: int, geometry: BeamGeometry):
    coeffs = np.array(
        [simpson(mode_amplitude(n, grid, geometry) * samples, x=grid) for n in range(max_order + 1)],
        dtype=complex,
    )
    norm2 = float(simpson(np.abs(samples) ** 2, x=grid))
    return coeffs, norm2


def decompose_field(field: SampledField, max_order: int, geometry: BeamGeometry) -> ModeCoefficients:
    """Project sampled field onto psi_0..psi_max_order with composite Simpson quadrature.

    ``residual`` is the field's own norm squared minus the captured power, i.e.
    the part living in orders above ``max_order``.
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    check_span(field.grid, geometry)
    coeffs, norm2 = _project(field.grid, field.samples, max_order, geometry)
    residual = norm2 - float(np.sum(np.abs(coeffs) ** 2))
    return ModeCoefficients(coeffs, residual)


def decompose_function(
    func: Callable[[np.ndarray], np.ndarray],
    max_order: int,
    geometry: BeamGeometry,
    tol: float = 1e-10,
    points: int = DEFAULT_POINTS,
    span: float = DEFAULT_SPAN_WAISTS,
    max_doublings: int = 8,
) -> ModeCoefficients:
    """Decompose an analytic field, doubling grid resolution until every c_n moves by < ``tol``."""
    grid = default_grid(geometry, points, span)
    previous = decompose_field(SampledField(grid, func(grid)), max_order, geometry)
    for _ in range(max_doublings):
        grid = default_grid(geometry, 2 * grid.size - 1, span)
        current = decompose_field(SampledField(grid, func(grid)), max_order, geometry)
        if np.max(np.abs(current.coeffs - previous.coeffs)) < tol:
            return current
        previous = current
    return previous


def tilt_coupling_exact(k: float, geometry: BeamGeometry) -> complex:
    """Exact <psi_1| exp(i k x) |psi_0> for a bare transverse kick ``k`` (rad/m)."""
    kw = k * geometry.waist
    return 1j * (kw / 2.0) * math.exp(-(kw**2) / 8.0)


def tilt_coupling_firstorder(k: float, geometry: BeamGeometry) -> complex:
    return 1j * k * geometry.waist / 2.0
