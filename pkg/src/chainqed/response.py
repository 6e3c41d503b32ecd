"""Two-photon output state shared by the single-emitter and chain solvers.

Every amplitude is stored per unit of the geometry's reference Rabi drive
(``drive``): ``alpha_unit = alpha_out / drive``, ``coh_unit = psi_coh /
drive**2`` and ``spectrum_unit(omega) = psi_incoh(omega) / drive**2``.
Ratios such as g2 are built only from these drive-free quantities, so they
do not change, bit for bit, when the drive is rescaled or rephased.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import EmitterParams, Geometry
from .grid import FrequencyGrid


@dataclass(frozen=True)
class TwoPhotonResponse:
    geometry: Geometry
    params: EmitterParams
    n_emitters: int
    drive: complex
    alpha_unit: complex
    coh_unit: complex
    spectrum_unit: Callable[[np.ndarray], np.ndarray]
    flags: frozenset = field(default_factory=frozenset)
    # analytic psi_incoh(tau) / drive**2 when one exists
    time_unit: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def alpha_out(self) -> complex:
        return self.drive * self.alpha_unit

    @property
    def psi_coh(self) -> complex:
        return self.drive**2 * self.coh_unit

    def psi_incoh_freq(self, omega):
        return self.drive**2 * self.spectrum_unit(np.asarray(omega, dtype=float))

    def psi_incoh_time(self, tau):
        if self.time_unit is None:
            raise AttributeError(
                f"{self.geometry.value} response has no closed-form time trace; "
                "use observables.freq_to_time")
        return self.drive**2 * self.time_unit(np.asarray(tau, dtype=float))


@dataclass(frozen=True)
class SingleEmitterResponse(TwoPhotonResponse):
    """Exact response of one emitter; carries both spectral and temporal forms."""


@dataclass(frozen=True, eq=False)
class EnsembleResponse(TwoPhotonResponse):
    """Chain response with its incoherent spectrum sampled on ``grid``."""

    grid: FrequencyGrid = field(default_factory=FrequencyGrid)
    samples_unit: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.samples_unit is None:
            object.__setattr__(self, "samples_unit", self.spectrum_unit(self.grid.omega))

    @property
    def omega(self) -> np.ndarray:
        return self.grid.omega

    @property
    def psi_incoh_samples(self) -> np.ndarray:
        return self.drive**2 * self.samples_unit
