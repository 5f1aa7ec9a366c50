"""Monte Carlo shot-noise oracle for the homodyne and split detectors.

The simulation never calls the closed-form SNR expressions. The signal is
obtained from the exact dark-port field (mode projection for BHD, half-plane
intensity integrals for SD) and noise is drawn per trial.

Signal convention: the closed-form homodyne signal 2 sqrt(N') |A_w| k w0 is
twice the TEM10 amplitude sqrt(N') c_1 of the dark-port field times the usual
quadrature gain of 2. Both simulated detectors apply the same
``SIGNAL_CONVENTION`` factor to the signal (never to the noise), so the
simulated SNRs are on the same scale as the closed forms and the split/homodyne
efficiency ratio is untouched.

Random numbers come from numpy's Philox4x64 counter-based generator. Trials
are cut into fixed-size blocks; block ``b`` draws from a stream keyed on
``(seed, b)``, so the output does not depend on the number of workers.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .detection import COHERENT, NoiseQuadrature, PhotonBudget
from .hg_modes import BeamGeometry, check_span, decompose_field, default_grid, mode_amplitude
from .weak_measurement import InterferometerSetting, TiltKick, dark_port_field

SIGNAL_CONVENTION = 2.0
DEFAULT_BLOCK = 1 << 16


class PhotonModel(str, enum.Enum):
    GAUSSIAN = "gaussian-quadrature-noise"
    POISSON = "poisson-counting"


@dataclass(frozen=True)
class McConfig:
    trials: int
    seed: int = 0
    model: PhotonModel = PhotonModel.GAUSSIAN
    block_size: int = DEFAULT_BLOCK
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.block_size < 1 or self.workers < 1:
            raise ValueError("block_size and workers must be >= 1")
        object.__setattr__(self, "model", PhotonModel(self.model))


@dataclass(frozen=True)
class EmpiricalOutcome:
    scheme: str
    trials: int
    seed: int
    mean: float
    variance: float
    snr: float
    mean_stderr: float
    snr_stderr: float

    def summary(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "mean": self.mean,
            "variance": self.variance,
            "snr": self.snr,
            "stderr": self.snr_stderr,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def _draw(config: McConfig, sampler: Callable[[np.random.Generator, int], np.ndarray]) -> np.ndarray:
    sizes = [config.block_size] * (config.trials // config.block_size)
    if config.trials % config.block_size:
        sizes.append(config.trials % config.block_size)

    def run(item):
        block, size = item
        return sampler(block_generator(config.seed, block), size)

    items = list(enumerate(sizes))
    if config.workers == 1:
        parts = [run(it) for it in items]
    else:
        with ThreadPoolExecutor(config.workers) as pool:
            parts = list(pool.map(run, items))
    return np.concatenate(parts)


def _summarize(scheme: str, config: McConfig, x: np.ndarray) -> EmpiricalOutcome:
    n = x.size
    mean = float(np.mean(x))
    if n < 2:
        return EmpiricalOutcome(scheme, n, config.seed, mean, math.nan, math.nan, math.nan, math.nan)
    centered = x - mean
    var = float(np.sum(centered**2) / (n - 1))
    m4 = float(np.mean(centered**4))
    snr = mean**2 / var
    # delta method on mean^2 / var with independent-ish estimators
    var_of_mean = var / n
    var_of_var = max(m4 - var**2, 0.0) / n
    snr_var = (2.0 * mean / var) ** 2 * var_of_mean + (mean**2 / var**2) ** 2 * var_of_var
    return EmpiricalOutcome(
        scheme, n, config.seed, mean, var, snr, math.sqrt(var_of_mean), math.sqrt(snr_var)
    )


def tem10_amplitude(
    n_signal: float, setting: InterferometerSetting, kick: TiltKick, geometry: BeamGeometry
) -> float:
    """sqrt(N') times the psi_1 coefficient of the normalized exact dark-port field."""
    dark = dark_port_field(setting, kick, geometry)
    c1 = decompose_field(dark.field, 1, geometry)[1]
    return math.sqrt(n_signal) * c1.real


def simulate_bhd(
    config: McConfig,
    budget: PhotonBudget,
    setting: InterferometerSetting,
    kick: TiltKick,
    geometry: BeamGeometry,
    noise: NoiseQuadrature = COHERENT,
) -> EmpiricalOutcome:
    """Empirical TEM10-homodyne difference current in vacuum-normalized units.

    Gaussian model: signal plus a normal quadrature sample of variance
    ``noise.variance``. Poisson model: photon counts of the two balanced
    detectors, (n1 - n2) / sqrt(N_LO); the dark-port photons outside the LO
    mode add their own shot noise, so keep N_LO >> N' for a clean comparison.
    """
    signal_amp = SIGNAL_CONVENTION * tem10_amplitude(budget.n_signal, setting, kick, geometry)
    quadrature_mean = 2.0 * signal_amp

    if config.model is PhotonModel.GAUSSIAN:
        sigma = math.sqrt(noise.variance)

        def sampler(rng, size):
            return quadrature_mean + sigma * rng.standard_normal(size)

    else:
        if noise.variance != 1.0:
            raise ValueError("the Poisson model only describes coherent (unit-variance) light")
        lo = math.sqrt(budget.n_lo)
        other = max(budget.n_signal - signal_amp**2, 0.0) / 2.0
        lam1 = (lo + signal_amp) ** 2 / 2.0 + other
        lam2 = (lo - signal_amp) ** 2 / 2.0 + other

        def sampler(rng, size):
            n1 = rng.poisson(lam1, size)
            n2 = rng.poisson(lam2, size)
            return (n1 - n2) / lo

    return _summarize("bhd", config, _draw(config, sampler))


def _half_plane_split(grid: np.ndarray, density: np.ndarray) -> tuple[float, float]:
    """Integrals of ``density`` over x <= 0 and x >= 0 (grid must contain x = 0)."""
    zero = np.flatnonzero(grid == 0.0)
    if zero.size != 1:
        raise ValueError("half-plane integration needs a grid with a node at x = 0")
    i = int(zero[0])
    left = simpson(density[: i + 1], x=grid[: i + 1])
    right = simpson(density[i:], x=grid[i:])
    return float(left), float(right)


def half_plane_overlap(geometry: BeamGeometry, grid=None) -> float:
    """Integral of sign(x) psi_0(x) psi_1(x); the closed form is sqrt(2/pi)."""
    grid = default_grid(geometry, 4001) if grid is None else np.asarray(grid, dtype=float)
    check_span(grid, geometry)
    product = mode_amplitude(0, grid, geometry) * mode_amplitude(1, grid, geometry)
    left, right = _half_plane_split(grid, product)
    return right - left


def simulate_sd(
    config: McConfig,
    budget: PhotonBudget,
    setting: InterferometerSetting,
    kick: TiltKick,
    geometry: BeamGeometry,
    grid=None,
) -> EmpiricalOutcome:
    """Empirical split-detector difference, normalized by sqrt(detected photons).

    The mean imbalance comes from integrating the exact dark-port intensity over
    the two half-planes; shot noise of the detected photon number is added per
    trial.
    """
    grid = default_grid(geometry, 4001) if grid is None else np.asarray(grid, dtype=float)
    dark = dark_port_field(setting, kick, geometry, grid)
    intensity = np.abs(dark.field.samples) ** 2
    left, right = _half_plane_split(dark.field.grid, intensity)
    detected = budget.n_signal
    imbalance = SIGNAL_CONVENTION * detected * (right - left)
    scale = math.sqrt(detected)

    if config.model is PhotonModel.GAUSSIAN:
        mean = imbalance / scale

        def sampler(rng, size):
            return mean + rng.standard_normal(size)

    else:
        lam_right = detected / 2.0 + imbalance / 2.0
        lam_left = detected / 2.0 - imbalance / 2.0
        if lam_left < 0:
            raise ValueError("signal imbalance exceeds the detected photon number")

        def sampler(rng, size):
            return (rng.poisson(lam_right, size) - rng.poisson(lam_left, size)) / scale

    return _summarize("sd", config, _draw(config, sampler))
