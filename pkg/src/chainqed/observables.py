"""Measurable quantities derived from a two-photon response.

Spectra of Lorentzian type decay only as 1/omega**2, so a bare trapezoid
or FFT on a finite window leaves an error of order 1/W.  Before transforming
we fit the large-|omega| behaviour with a few Lorentzians whose transforms
are known exactly, transform only the fast-decaying residual and add the
Lorentzians back in the delay domain.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import GAMMA, DriveConfig, EmitterParams, Geometry, input_amplitude
from .ensemble import respond
from .errors import GridTruncation, UnsupportedGeometry
from .grid import FrequencyGrid
from .response import EnsembleResponse, TwoPhotonResponse
from .single_emitter import normalized_incoherent_freq

BOUNDARY_TOLERANCE = 1e-6
RESOLUTION_TOLERANCE = 1e-6
TAIL_FIT_TOLERANCE = 1e-7
MAX_WIDENINGS = 3
ZERO_POWER = "coherent power is zero"

# decay rates of the reference Lorentzians 2k/(k**2 + w**2) <-> exp(-k|tau|)
TAIL_RATES = np.array([1.0, 2.0, 3.0, 4.0])

Spectrum = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _lorentzians(rates, omega):
    return 2.0 * rates[:, None] / (rates[:, None] ** 2 + omega[None, :] ** 2)


def tail_model(grid: FrequencyGrid, values: np.ndarray) -> np.ndarray:
    """Weights A_k such that sum_k A_k 2k/(k**2+w**2) matches ``values`` for large |w|.

    The outer half of the grid is fitted as a polynomial in (W/w)**2 for
    w**2 * values; matching the 1/w**2 .. 1/w**8 coefficients fixes the
    weights of four reference Lorentzians.
    """
    omega = grid.omega
    w = grid.half_width
    outer = np.abs(omega) >= w / 2
    u = (w / omega[outer]) ** 2
    basis = np.vander(u, len(TAIL_RATES), increasing=True)
    coef, *_ = np.linalg.lstsq(basis, omega[outer] ** 2 * values[outer], rcond=None)
    coef = coef * w ** (2 * np.arange(len(TAIL_RATES)))
    # 2k/(k^2+w^2) = sum_j 2k (-k^2)^j / w^(2j+2)
    match = np.array([[2.0 * k * (-k * k) ** j for k in TAIL_RATES] for j in range(len(TAIL_RATES))])
    return np.linalg.solve(match, coef)


@dataclass(frozen=True)
class _Decomposed:
    grid: FrequencyGrid
    values: np.ndarray
    residual: np.ndarray
    weights: np.ndarray
    widenings: int


def _trapezoid(values, spacing):
    return spacing * (values.sum() - 0.5 * (values[0] + values[-1]))


def _decompose(spectrum: Spectrum, grid: FrequencyGrid, tail_correction=True,
               check=True) -> _Decomposed:
    """Split a spectrum into reference Lorentzians plus a residual, checking the grid.

    Two things can go wrong on a finite grid: the residual may not have
    decayed at the window edge, and the sampling may be too coarse for
    narrow features.  The first is measured at +-W and by how much of the
    residual is left in the fitted outer band (a poor tail fit there means
    the part beyond W is poorly modelled too); the second by comparing the
    trapezoid integral with the one from every other sample.  A callable
    spectrum gets up to three wider or finer grids; sampled values cannot be
    re-evaluated, so an inadequate grid is an error.
    """
    adjustments = 0
    while True:
        values = np.asarray(spectrum(grid.omega) if callable(spectrum) else spectrum, dtype=complex)
        if values.shape != grid.omega.shape:
            raise ValueError(f"spectrum has {values.size} samples, grid has {grid.omega.size}")
        peak = np.abs(values).max()
        if peak == 0.0 or not tail_correction:
            weights = np.zeros(len(TAIL_RATES), dtype=complex) if tail_correction else np.zeros(0)
            residual = values
        else:
            weights = tail_model(grid, values)
            residual = values - weights @ _lorentzians(TAIL_RATES, grid.omega)
        if not check or peak == 0.0:
            return _Decomposed(grid, values, residual, weights, adjustments)
        edge = max(abs(residual[0]), abs(residual[-1])) / peak
        scale = _trapezoid(np.abs(values), grid.spacing)
        if tail_correction:
            outer = np.abs(grid.omega) >= grid.half_width / 2
            tail = _trapezoid(np.abs(residual) * outer, grid.spacing) / scale
        else:
            tail = 0.0
        truncated = edge >= BOUNDARY_TOLERANCE or tail >= TAIL_FIT_TOLERANCE
        coarse = abs(_trapezoid(residual, grid.spacing)
                      - _trapezoid(residual[::2], 2.0 * grid.spacing))
        resolution = coarse / scale
        if not truncated and resolution < RESOLUTION_TOLERANCE:
            return _Decomposed(grid, values, residual, weights, adjustments)
        if not callable(spectrum) or adjustments == MAX_WIDENINGS:
            if edge >= BOUNDARY_TOLERANCE:
                problem = (f"spectrum at +-{grid.half_width:g} Gamma is {edge:.2e} of its peak "
                           f"(tolerance {BOUNDARY_TOLERANCE:g})")
            elif truncated:
                problem = (f"tail fit beyond {grid.half_width / 2:g} Gamma leaves {tail:.2e} of the "
                           f"spectral weight (tolerance {TAIL_FIT_TOLERANCE:g})")
            else:
                problem = (f"spectral features unresolved at spacing {grid.spacing:.3g} Gamma "
                       f"(half-resolution mismatch {resolution:.2e}, tolerance {RESOLUTION_TOLERANCE:g})")
            raise GridTruncation(f"{problem} after {adjustments} widenings; "
                                 "increase --grid-width/--grid-points")
        grid = grid.widened() if truncated else grid.refined()
        adjustments += 1


@dataclass(frozen=True)
class TimeSamples:
    """psi_incoh on the delay grid conjugate to ``grid`` (tau in 1/Gamma, values in Gamma)."""

    tau: np.ndarray
    values: np.ndarray
    grid: FrequencyGrid
    widenings: int = 0


def freq_to_time(spectrum: Spectrum, grid: Optional[FrequencyGrid] = None,
                 tail_correction: bool = True, check: bool = True) -> TimeSamples:
    """psi(tau) = (1/2pi) int psi(omega) exp(-i omega tau) domega.

    ``spectrum`` is either the samples on ``grid`` or a callable, in which
    case an inadequate grid is widened up to three times.  With
    ``tail_correction=False`` the plain periodic trapezoid is returned.
    """
    grid = grid or FrequencyGrid()
    d = _decompose(spectrum, grid, tail_correction, check)
    g = d.grid
    n = g.n_points
    r = d.residual
    b = r[:n].copy()
    b[0] = 0.5 * (r[0] + r[n])
    j = np.arange(n)
    # the grid starts at -W, which shifts every output by (-1)^j
    out = np.fft.fft(b) * (g.spacing / (2.0 * math.pi)) * np.where(j % 2, -1.0, 1.0)
    tau = np.where(j < n // 2, j, j - n) * g.tau_spacing
    if d.weights.size:
        out = out + d.weights @ np.exp(-TAIL_RATES[:, None] * np.abs(tau)[None, :])
    order = np.argsort(tau, kind="stable")
    return TimeSamples(tau[order], out[order], g, d.widenings)


def _integral(spectrum: Spectrum, grid: FrequencyGrid) -> complex:
    d = _decompose(spectrum, grid)
    r = d.residual
    trapezoid = d.grid.spacing * (r.sum() - 0.5 * (r[0] + r[-1]))
    # each reference Lorentzian integrates to 2 pi
    return complex(trapezoid / (2.0 * math.pi) + d.weights.sum())


def _unit_spectrum_fn(response, grid):
    if grid is None and isinstance(response, EnsembleResponse):
        grid = response.grid
        samples = response.samples_unit

        def spectrum(omega):
            if omega.size == samples.size:
                return samples
            return response.spectrum_unit(omega)

        return spectrum, grid
    return response.spectrum_unit, grid or FrequencyGrid()


def psi_incoh_at_zero_unit(response: TwoPhotonResponse, grid: Optional[FrequencyGrid] = None) -> complex:
    fn, grid = _unit_spectrum_fn(response, grid)
    return _integral(fn, grid)


def psi_incoh_at_zero(response: TwoPhotonResponse, grid: Optional[FrequencyGrid] = None) -> complex:
    """psi_incoh(tau=0), the frequency integral of the pair spectrum over 2 pi (units of Gamma)."""
    return response.drive**2 * psi_incoh_at_zero_unit(response, grid)


@dataclass(frozen=True)
class CorrelationTrace:
    tau: np.ndarray
    g2: np.ndarray
    geometry: Geometry
    params: EmitterParams
    n_emitters: int
    flags: frozenset = frozenset()
    explanation: Optional[str] = None


def _g2(response, psi_unit):
    a4 = abs(response.alpha_unit) ** 4
    if a4 == 0.0:
        return np.full(np.shape(psi_unit), np.inf)
    return np.abs(response.coh_unit + psi_unit) ** 2 / a4


def g2_trace(response: TwoPhotonResponse, grid: Optional[FrequencyGrid] = None,
             tau: Optional[np.ndarray] = None) -> CorrelationTrace:
    """g2(tau) = |psi_coh + psi_incoh(tau)|**2 / |alpha_out|**4.

    Uses the closed-form delay dependence when the response carries one,
    otherwise transforms the spectrum.  Only drive-normalized amplitudes
    enter, so g2 is independent of the drive's magnitude and phase.  Zero
    coherent output gives +inf with an explanation.
    """
    if response.time_unit is not None:
        tau = (grid or FrequencyGrid()).tau if tau is None else np.asarray(tau, dtype=float)
        psi = response.time_unit(tau)
    else:
        fn, g = _unit_spectrum_fn(response, grid)
        samples = freq_to_time(fn, g)
        if tau is None:
            tau, psi = samples.tau, samples.values
        else:
            tau = np.asarray(tau, dtype=float)
            psi = np.interp(tau, samples.tau, samples.values.real) + 1j * np.interp(
                tau, samples.tau, samples.values.imag)
    values = _g2(response, psi)
    explanation = ZERO_POWER if abs(response.alpha_unit) == 0.0 else None
    return CorrelationTrace(tau, values, response.geometry, response.params,
                            response.n_emitters, response.flags, explanation)


def g2_zero(response: TwoPhotonResponse, grid: Optional[FrequencyGrid] = None) -> float:
    """g2(0), +inf when the coherent output vanishes."""
    if response.time_unit is not None:
        psi = response.time_unit(np.zeros(1))[0]
    else:
        psi = psi_incoh_at_zero_unit(response, grid)
    return float(_g2(response, psi))


@dataclass(frozen=True)
class SqueezingSpectrum:
    omega: np.ndarray
    theta: float
    S: np.ndarray
    optimal_theta: np.ndarray
    S_min: np.ndarray


def squeezing_spectrum(response: TwoPhotonResponse, theta: float,
                       omega: Optional[np.ndarray] = None) -> SqueezingSpectrum:
    """S_theta(omega) = -|psi_incoh(omega)| cos(2 theta + arg psi_incoh(omega)) / 2.

    theta is the phase in X_theta = (a e^{i theta} + a^dag e^{-i theta}) / 2.
    The per-frequency optimum is reported in [0, pi).
    """
    if omega is None:
        omega = response.grid.omega if isinstance(response, EnsembleResponse) else FrequencyGrid().omega
    omega = np.asarray(omega, dtype=float)
    psi = response.psi_incoh_freq(omega)
    mag = np.abs(psi)
    phase = np.angle(psi)
    s = -0.5 * mag * np.cos(2.0 * theta + phase)
    best = np.mod(-phase / 2.0, math.pi)
    return SqueezingSpectrum(omega, float(theta), s, best, -0.5 * mag)


def _resonant(p: EmitterParams, what: str):
    if p.delta != 0.0:
        raise UnsupportedGeometry(f"{what} holds on resonance only (delta=0), got delta={p.delta}")


def approx_low_od_spectrum(p: EmitterParams, n: int, omega, omega_wg=1.0):
    """Optically thin chain: N independent copies of the single-emitter spectrum."""
    return n * omega_wg**2 * normalized_incoherent_freq(p, omega)


def approx_large_od_spectrum(p: EmitterParams, n: int, omega, omega_wg=1.0):
    """Continuum-limit pair spectrum of a thick resonant chain, first order in beta.

    With OD = 4 beta N:  -(alpha_in**2 beta / omega**2) (exp(-OD/(1+4 omega**2)) - exp(-OD)).
    """
    _resonant(p, "the large-OD spectrum")
    omega = np.asarray(omega, dtype=float)
    if np.any(omega == 0.0):
        raise ValueError("the large-OD spectrum diverges at omega = 0")
    od = 4.0 * p.beta * n
    a2 = input_amplitude(p, omega_wg) ** 2
    x = omega / GAMMA
    return -(a2 * p.beta / x**2) * (np.exp(-od / (1.0 + 4.0 * x**2)) - math.exp(-od))


def approx_psi_zero_large_od(p: EmitterParams, n: int, omega_wg=1.0) -> complex:
    """Leading large-OD estimate -alpha_in**2 sqrt(beta/(4 pi N)) of psi_incoh(0)."""
    _resonant(p, "the large-OD estimate")
    if n < 1:
        raise ValueError("n must be at least 1")
    return -input_amplitude(p, omega_wg) ** 2 * math.sqrt(p.beta / (4.0 * math.pi * n)) * GAMMA


def approx_g2_zero(p: EmitterParams, n: int) -> float:
    """[1 - exp(4 beta N) sqrt(beta / (4 pi N))]**2."""
    _resonant(p, "the g2 approximation")
    if n < 1:
        raise ValueError("n must be at least 1")
    return (1.0 - math.exp(4.0 * p.beta * n) * math.sqrt(p.beta / (4.0 * math.pi * n))) ** 2


def g2_zero_sweep(p: EmitterParams, drive: DriveConfig, n_values: Sequence[int],
                  grid: Optional[FrequencyGrid] = None, max_workers: Optional[int] = None,
                  solver: Callable = respond) -> tuple[np.ndarray, np.ndarray]:
    """g2(0) for each emitter number, sorted by N with duplicates removed."""
    ns = np.unique(np.asarray(list(n_values), dtype=int))
    grid = grid or FrequencyGrid()

    def one(n):
        return g2_zero(solver(p, dataclasses.replace(drive, n_emitters=int(n)), grid))

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        values = list(pool.map(one, ns))
    return ns, np.array(values)


def antibunching_point(p: EmitterParams, drive: DriveConfig, n_values: Sequence[int],
                       grid: Optional[FrequencyGrid] = None, **kwargs) -> tuple[int, float]:
    """Emitter number minimizing g2(0); ties go to the smaller N."""
    ns, values = g2_zero_sweep(p, drive, n_values, grid, **kwargs)
    k = int(np.argmin(values))
    return int(ns[k]), float(values[k])
