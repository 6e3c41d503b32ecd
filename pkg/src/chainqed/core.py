"""Parameter types and single-pass coefficients of a chirally coupled emitter.

All frequencies are in units of the total decay rate Gamma and all times in
units of 1/Gamma; Gamma itself is fixed to 1.  Amplitudes follow the flux
convention: |alpha|**2 is a photon flux (photons per 1/Gamma), two-photon
amplitudes psi(tau) carry units of Gamma, and spectra psi(omega) are
dimensionless.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import SaturationError, UnsupportedGeometry

GAMMA = 1.0

WEAK_COUPLING_LIMIT = 0.1
WEAK_DRIVE_LIMIT = 0.1

FLAG_STRONG_COUPLING = "beta>0.1: weak-coupling assumption violated"
FLAG_STRONG_DRIVE = "|Omega|>0.1 Gamma: weak-drive assumption violated"
FLAG_ANTIPHASE = "r<0: external and guided drives in anti-phase"


class Geometry(str, enum.Enum):
    EXTERNAL_SINGLE = "external"
    WAVEGUIDE = "waveguide"
    BRAGG = "bragg"
    ANTI_BRAGG = "antibragg"
    COMBINED = "combined"

    @classmethod
    def parse(cls, value) -> "Geometry":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"single": "external", "externalsingle": "external", "antibragg": "antibragg"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown geometry {value!r}")


@dataclass(frozen=True)
class EmitterParams:
    """Physical constants shared by every emitter of a uniform chain.

    ``beta`` is the probability of emission into the forward guided mode and
    ``delta`` the laser-atom detuning in units of Gamma.
    """

    beta: float
    delta: float = 0.0
    gamma: float = GAMMA

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.gamma != GAMMA:
            raise ValueError("gamma is the unit of frequency and must equal 1")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")

    @property
    def flags(self) -> frozenset:
        return frozenset({FLAG_STRONG_COUPLING}) if self.beta > WEAK_COUPLING_LIMIT else frozenset()


@dataclass(frozen=True)
class DriveConfig:
    """Illumination geometry and complex Rabi amplitudes (units of Gamma).

    Which amplitude is read depends on the geometry: the external
    geometries use ``omega_ext``, the waveguide geometry uses ``omega_wg``,
    and combined illumination uses both.
    """

    mode: Geometry
    omega_wg: complex = 0.0
    omega_ext: complex = 0.0
    n_emitters: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", Geometry.parse(self.mode))
        object.__setattr__(self, "omega_wg", complex(self.omega_wg))
        object.__setattr__(self, "omega_ext", complex(self.omega_ext))
        if int(self.n_emitters) != self.n_emitters or self.n_emitters < 0:
            raise ValueError(f"n_emitters must be a non-negative integer, got {self.n_emitters}")
        object.__setattr__(self, "n_emitters", int(self.n_emitters))
        if abs(self.omega_wg) + abs(self.omega_ext) <= 0.0:
            raise ValueError("at least one drive amplitude must be nonzero")

    @classmethod
    def external(cls, omega_ext, n_emitters=1, mode=Geometry.EXTERNAL_SINGLE):
        return cls(mode=mode, omega_ext=omega_ext, n_emitters=n_emitters)

    @classmethod
    def waveguide(cls, omega_wg, n_emitters=1):
        return cls(mode=Geometry.WAVEGUIDE, omega_wg=omega_wg, n_emitters=n_emitters)

    @classmethod
    def combined(cls, omega_wg, ratio, n_emitters=1):
        return cls(mode=Geometry.COMBINED, omega_wg=omega_wg, omega_ext=ratio * omega_wg,
                   n_emitters=n_emitters)

    @property
    def reference(self) -> complex:
        """The Rabi amplitude every output amplitude of this geometry scales with."""
        if self.mode in (Geometry.WAVEGUIDE, Geometry.COMBINED):
            return self.omega_wg
        return self.omega_ext

    @property
    def ratio(self) -> float:
        """Real ratio Omega_ext / Omega_wg of a combined drive.

        Rounded to 12 decimals so that a common rescaling or rotation of both
        amplitudes yields the identical ratio.
        """
        if self.omega_wg == 0:
            if self.mode is Geometry.COMBINED:
                raise UnsupportedGeometry("combined illumination needs a nonzero guided drive")
            return 0.0
        r = self.omega_ext / self.omega_wg
        if abs(r.imag) > 1e-9 * max(1.0, abs(r)):
            raise UnsupportedGeometry(
                f"external and guided drives must be in phase or anti-phase, ratio {r} is complex")
        return round(r.real, 12)

    @property
    def flags(self) -> frozenset:
        flags = set()
        used = {
            Geometry.WAVEGUIDE: (self.omega_wg,),
            Geometry.COMBINED: (self.omega_wg, self.omega_ext),
        }.get(self.mode, (self.omega_ext,))
        if max(abs(w) for w in used) > WEAK_DRIVE_LIMIT:
            flags.add(FLAG_STRONG_DRIVE)
        if self.mode is Geometry.COMBINED and self.ratio < 0:
            flags.add(FLAG_ANTIPHASE)
        return frozenset(flags)


def photon_generation_coefficient(p: EmitterParams, at_detuning):
    """g = 2 beta / (1 - 2i x) at effective detuning x (scalar or array)."""
    return 2.0 * p.beta / (1.0 - 2.0j * np.asarray(at_detuning) / GAMMA)


def transmission_coefficient(p: EmitterParams, at_detuning):
    """Single-emitter amplitude transmission t = 1 - g."""
    return 1.0 - photon_generation_coefficient(p, at_detuning)


def coherent_scattering_amplitude(p: EmitterParams, omega_local) -> complex:
    """Forward-scattered coherent amplitude for a local Rabi drive, sqrt-flux units."""
    g = photon_generation_coefficient(p, p.delta)
    return -(omega_local / (2.0 * math.sqrt(p.beta * GAMMA))) * g


def input_amplitude(p: EmitterParams, omega_wg) -> complex:
    """Guided coherent amplitude corresponding to a guided Rabi drive."""
    return omega_wg / (2.0 * math.sqrt(p.beta * GAMMA))


def optical_depth(p: EmitterParams, n: int) -> float:
    """Resonant-probe optical depth -2 N log|t_Delta| of an N-emitter chain."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 0.0
    t = abs(complex(transmission_coefficient(p, p.delta)))
    if t == 0.0:
        raise SaturationError(
            f"|t| = 0 at beta={p.beta}, delta={p.delta}: a single emitter extinguishes the probe")
    return -2.0 * n * math.log(t)


def optical_depth_small_beta(p: EmitterParams, n: int) -> float:
    """Leading-order optical depth 4 beta N."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return 4.0 * p.beta * n
