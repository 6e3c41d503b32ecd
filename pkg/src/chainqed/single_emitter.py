"""Exact two-photon response of a single emitter for the three drive paths."""

from __future__ import annotations

import numpy as np

from .core import (GAMMA, DriveConfig, EmitterParams, Geometry, coherent_scattering_amplitude,
                   input_amplitude, photon_generation_coefficient)
from .errors import UnsupportedGeometry
from .response import SingleEmitterResponse


def incoherent_time(p: EmitterParams, omega_local, tau):
    """Incoherently scattered pair amplitude psi_incoh(tau), units of Gamma."""
    a = abs(np.asarray(tau, dtype=float))
    alpha_sc = coherent_scattering_amplitude(p, omega_local)
    return -alpha_sc**2 * np.exp(-GAMMA * a / 2.0) * np.exp(1j * p.delta * a)


def normalized_incoherent_freq(p: EmitterParams, omega):
    """Pair spectrum per unit squared Rabi drive."""
    omega = np.asarray(omega, dtype=float)
    g0 = photon_generation_coefficient(p, p.delta)
    # g(D+w) g(D-w) written through w**2 so the result is exactly even
    a = 1.0 - 2.0j * p.delta / GAMMA
    pair = 4.0 * p.beta**2 / (a * a + 4.0 * (omega / GAMMA) ** 2)
    return -(g0 / (2.0 * p.beta**2 * GAMMA**2)) * pair


def incoherent_freq(p: EmitterParams, omega_local, omega):
    """Pair spectrum psi_incoh(omega) = int psi_incoh(tau) exp(i omega tau) dtau."""
    return omega_local**2 * normalized_incoherent_freq(p, omega)


def _response(p, drive, geometry, local_unit, alpha_unit, coh_unit):
    flags = p.flags | drive.flags

    def spectrum(omega):
        return incoherent_freq(p, local_unit, omega)

    def time(tau):
        return incoherent_time(p, local_unit, tau)

    return SingleEmitterResponse(
        geometry=geometry, params=p, n_emitters=1, drive=drive.reference,
        alpha_unit=alpha_unit, coh_unit=coh_unit, spectrum_unit=spectrum,
        flags=flags, time_unit=time)


def _require(drive: DriveConfig, mode: Geometry):
    if drive.mode is not mode:
        raise UnsupportedGeometry(f"expected a {mode.value} drive, got {drive.mode.value}")
    if drive.n_emitters != 1:
        raise UnsupportedGeometry(f"single-emitter response needs n_emitters=1, got {drive.n_emitters}")


def response_external(p: EmitterParams, drive: DriveConfig) -> SingleEmitterResponse:
    """Emitter driven from outside the waveguide; only scattered light is guided."""
    _require(drive, Geometry.EXTERNAL_SINGLE)
    a = coherent_scattering_amplitude(p, 1.0)
    return _response(p, drive, Geometry.EXTERNAL_SINGLE, 1.0, a, a * a)


def response_waveguide(p: EmitterParams, drive: DriveConfig) -> SingleEmitterResponse:
    """Emitter driven by the guided probe; transmitted and scattered light interfere."""
    _require(drive, Geometry.WAVEGUIDE)
    t = 1.0 - photon_generation_coefficient(p, p.delta)
    a = t * input_amplitude(p, 1.0)
    return _response(p, drive, Geometry.WAVEGUIDE, 1.0, a, a * a)


def effective_beta(p: EmitterParams, ratio: float) -> float:
    """beta' = beta (1 + Omega_ext / Omega_wg) for in-phase combined drive."""
    return p.beta * (1.0 + ratio)


def response_combined(p: EmitterParams, drive: DriveConfig) -> SingleEmitterResponse:
    """Emitter driven simultaneously through the waveguide and from outside.

    Behaves as a waveguide-driven emitter whose coupling is rescaled to
    beta'; the pair amplitude is generated by the summed local drive.
    """
    _require(drive, Geometry.COMBINED)
    r = drive.ratio
    g_eff = 2.0 * effective_beta(p, r) / (1.0 - 2.0j * p.delta / GAMMA)
    a = (1.0 - g_eff) * input_amplitude(p, 1.0)
    return _response(p, drive, Geometry.COMBINED, 1.0 + r, a, a * a)
