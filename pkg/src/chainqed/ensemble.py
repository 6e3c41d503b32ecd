"""Output state of N emitters cascaded along a chiral waveguide.

Each emitter n sees a local coherent drive, scatters a correlated photon
pair with the single-emitter spectrum, and the pair is then filtered by the
linear transmission of the N - n emitters downstream.  Four illumination
geometries differ only in how the local drive evolves along the chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .core import (GAMMA, DriveConfig, EmitterParams, Geometry,
                   coherent_scattering_amplitude, input_amplitude, transmission_coefficient)
from .errors import NoPhysicalAngle, SaturationError, UnsupportedGeometry
from .grid import FrequencyGrid
from .response import EnsembleResponse, TwoPhotonResponse
from .single_emitter import incoherent_freq, normalized_incoherent_freq, response_external

DEGENERATE_DENOMINATOR = 1e-12

FLAG_EFFECTIVE_COUPLING = "beta'(n)>0.1 for some emitter: weak-coupling assumption violated"
FLAG_UNPHYSICAL_COUPLING = "beta'(n)>=1 for some emitter: outside the model's domain"
FLAG_SUBWAVELENGTH = "a<lambda: near-field coupling between emitters neglected"


def _horner(x, y, n):
    """sum_{k=1..n} x**(k-1) * y**(n-k), evaluated term by term."""
    s = np.zeros(np.broadcast(x, y).shape, dtype=complex)
    xk = np.ones_like(s)
    for _ in range(n):
        s = s * y + xk
        xk = xk * x
    return s


def chain_factor(p: EmitterParams, n: int, omega):
    """Geometric sum over emitters for a guided (or Bragg) drive.

    Returns sum_k t_D**(2(k-1)) (t_{D+w} t_{D-w})**(n-k), i.e.
    (x**n - y**n) / (x - y) with x = t_D**2 and y the pair transmission.
    x - y is formed analytically and the power difference through
    expm1/log1p, so the ratio keeps full precision as omega -> 0.
    """
    omega = np.asarray(omega, dtype=float)
    if n == 0:
        return np.zeros(omega.shape, dtype=complex)
    if n == 1:
        return np.ones(omega.shape, dtype=complex)
    shape = omega.shape
    omega = omega.reshape(-1)
    a = 1.0 - 2.0j * p.delta / GAMMA
    b = a - 2.0 * p.beta
    w2 = 4.0 * (omega / GAMMA) ** 2
    x = (b / a) ** 2
    y = (b * b + w2) / (a * a + w2)
    diff = -4.0 * p.beta * w2 * (a - p.beta) / (a * a * (a * a + w2))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = diff / y
        out = y ** (n - 1) * special.expm1(n * special.log1p(u)) / u
    fallback = (np.abs(diff) < DEGENERATE_DENOMINATOR) | ~np.isfinite(out)
    if np.any(fallback):
        out = np.where(fallback, 0.0, out)
        out[fallback] = _horner(x, y[fallback], n)
    return out.reshape(shape)


def chain_factor_antibragg(p: EmitterParams, n: int, omega):
    """(1 - |t_w|**(2n)) / (1 - |t_w|**2) for an undepleted resonant drive."""
    omega = np.asarray(omega, dtype=float)
    if n == 0:
        return np.zeros(omega.shape)
    if n == 1:
        return np.ones(omega.shape)
    loss = 4.0 * p.beta * (1.0 - p.beta) / (1.0 + 4.0 * (omega / GAMMA) ** 2)
    return -special.expm1(n * special.log1p(-loss)) / loss


def _ensemble(p, drive, grid, geometry, alpha_unit, spectrum, flags=frozenset()):
    return EnsembleResponse(
        geometry=geometry, params=p, n_emitters=drive.n_emitters, drive=drive.reference,
        alpha_unit=complex(alpha_unit), coh_unit=complex(alpha_unit) ** 2,
        spectrum_unit=spectrum, flags=p.flags | drive.flags | frozenset(flags),
        grid=grid or FrequencyGrid())


def _require(drive: DriveConfig, mode: Geometry, p: Optional[EmitterParams] = None):
    if drive.mode is not mode:
        raise UnsupportedGeometry(f"expected a {mode.value} drive, got {drive.mode.value}")
    if p is not None and p.delta != 0.0:
        raise UnsupportedGeometry(
            f"{mode.value} illumination is modelled on resonance only (delta=0), got delta={p.delta}")


def waveguide_chain(p: EmitterParams, drive: DriveConfig,
                    grid: Optional[FrequencyGrid] = None) -> EnsembleResponse:
    """N emitters probed through the waveguide, closed-form geometric sum."""
    _require(drive, Geometry.WAVEGUIDE)
    n = drive.n_emitters
    t = complex(transmission_coefficient(p, p.delta))

    def spectrum(omega):
        return normalized_incoherent_freq(p, omega) * chain_factor(p, n, omega)

    return _ensemble(p, drive, grid, Geometry.WAVEGUIDE, input_amplitude(p, 1.0) * t**n, spectrum)


def waveguide_chain_direct(p: EmitterParams, drive: DriveConfig,
                           grid: Optional[FrequencyGrid] = None) -> EnsembleResponse:
    """Same observable as :func:`waveguide_chain`, summed emitter by emitter.

    Emitter n is driven by t**(n-1) times the input drive and its pair is
    passed through the remaining emitters one at a time.
    """
    _require(drive, Geometry.WAVEGUIDE)
    n = drive.n_emitters
    t = complex(transmission_coefficient(p, p.delta))

    def spectrum(omega):
        omega = np.asarray(omega, dtype=float)
        pair = transmission_coefficient(p, p.delta + omega) * transmission_coefficient(
            p, p.delta - omega)
        total = np.zeros(omega.shape, dtype=complex)
        local = 1.0 + 0j
        for _ in range(n):
            total = total * pair + incoherent_freq(p, local, omega)
            local *= t
        return total

    local = 1.0 + 0j
    for _ in range(n):
        local *= t
    return _ensemble(p, drive, grid, Geometry.WAVEGUIDE, input_amplitude(p, 1.0) * local, spectrum)


@dataclass(frozen=True)
class BraggGeometry:
    """Periodic emitter array illuminated from the side.

    Lengths share one arbitrary unit; ``n_eff`` is the effective index of
    the guided mode, so the guided wavelength is ``wavelength / n_eff``.
    """

    lattice_spacing: float
    wavelength: float = 1.0
    n_eff: float = 1.0
    order: int = 1

    def __post_init__(self):
        if self.lattice_spacing <= 0 or self.wavelength <= 0 or self.n_eff <= 0:
            raise ValueError("lattice_spacing, wavelength and n_eff must be positive")

    @property
    def flags(self) -> frozenset:
        return frozenset({FLAG_SUBWAVELENGTH}) if self.lattice_spacing < self.wavelength else frozenset()


def _illumination_angle(geom: BraggGeometry, order: float, label: str) -> float:
    cos_angle = order * geom.wavelength / geom.lattice_spacing - geom.n_eff
    if abs(cos_angle) > 1.0:
        raise NoPhysicalAngle(
            f"no real {label} angle: cos = {cos_angle:.6g} for m={geom.order}, "
            f"a={geom.lattice_spacing:g}, n_eff={geom.n_eff:g}; "
            "choose another order or lattice spacing")
    return math.acos(cos_angle)


def bragg_angle(geom: BraggGeometry) -> float:
    """Angle (rad) at which all scattered amplitudes add in phase in the guide."""
    return _illumination_angle(geom, geom.order, "Bragg")


def anti_bragg_angle(geom: BraggGeometry) -> float:
    """Angle (rad) at which neighbouring scattered amplitudes cancel in the guide."""
    return _illumination_angle(geom, geom.order + 0.5, "anti-Bragg")


def bragg_chain(p: EmitterParams, drive: DriveConfig,
                grid: Optional[FrequencyGrid] = None) -> EnsembleResponse:
    """Resonant side illumination at the Bragg angle.

    The external field and the forward-scattered field are in opposition at
    every emitter, so the local drive decays as t0**(n-1) exactly as for a
    guided probe; only the coherent output differs.
    """
    _require(drive, Geometry.BRAGG, p)
    n = drive.n_emitters
    t0 = complex(transmission_coefficient(p, 0.0))
    a1 = coherent_scattering_amplitude(p, 1.0)

    def spectrum(omega):
        return normalized_incoherent_freq(p, omega) * chain_factor(p, n, omega)

    alpha = a1 * (1.0 - t0**n) / (2.0 * p.beta)
    return _ensemble(p, drive, grid, Geometry.BRAGG, alpha, spectrum)


def antibragg_chain(p: EmitterParams, drive: DriveConfig,
                    grid: Optional[FrequencyGrid] = None) -> EnsembleResponse:
    """Resonant side illumination at the anti-Bragg angle.

    Coherent amplitudes of neighbours cancel, leaving one emitter's worth
    for odd N and nothing for even N.  Every emitter is driven by the full
    external field; the weak residual guided field is neglected.
    """
    _require(drive, Geometry.ANTI_BRAGG, p)
    n = drive.n_emitters
    a1 = coherent_scattering_amplitude(p, 1.0)

    def spectrum(omega):
        return normalized_incoherent_freq(p, omega) * chain_factor_antibragg(p, n, omega)

    alpha = a1 if n % 2 else 0.0
    return _ensemble(p, drive, grid, Geometry.ANTI_BRAGG, alpha, spectrum)


def effective_couplings(p: EmitterParams, ratio: float, n: int,
                        self_consistent: bool = False) -> np.ndarray:
    """Effective coupling beta'(k) of emitters k = 1..n under combined drive.

    By default the guided drive reaching emitter k is taken as the bare
    resonant attenuation t0**(k-1) of the input.  With ``self_consistent``
    it is the actual guided amplitude, i.e. the product of the preceding
    effective transmissions.
    """
    t0 = 1.0 - 2.0 * p.beta
    out = np.empty(n)
    carried = 1.0
    for k in range(n):
        guided = carried if self_consistent else t0**k
        if guided == 0.0:
            raise SaturationError(f"guided drive vanishes before emitter {k + 1}; beta' diverges")
        out[k] = p.beta * (1.0 + ratio / guided)
        carried *= 1.0 - 2.0 * out[k]
    return out


def combined_chain(p: EmitterParams, drive: DriveConfig, grid: Optional[FrequencyGrid] = None,
                   self_consistent: bool = False) -> EnsembleResponse:
    """Resonant chain driven through the waveguide and at the Bragg angle in phase.

    Pair generation at emitter n uses its effective coupling beta'(n), while
    the pair is transmitted by downstream emitters with the bare coupling.
    """
    _require(drive, Geometry.COMBINED, p)
    r = drive.ratio
    n = drive.n_emitters
    if r == 0.0:
        # beta' = beta: the guided-only kernel is the exact reduction
        t = complex(transmission_coefficient(p, 0.0))

        def bare(omega):
            return normalized_incoherent_freq(p, omega) * chain_factor(p, n, omega)

        return _ensemble(p, drive, grid, Geometry.COMBINED, input_amplitude(p, 1.0) * t**n, bare)

    betas = effective_couplings(p, r, n, self_consistent)
    t_eff = 1.0 - 2.0 * betas
    # guided amplitude reaching each emitter, relative to the input
    carried = np.concatenate(([1.0], np.cumprod(t_eff)[:-1])) if n else np.ones(0)
    alpha_in_sq = input_amplitude(p, 1.0) ** 2

    def spectrum(omega):
        omega = np.asarray(omega, dtype=float)
        loss = np.abs(transmission_coefficient(p, omega)) ** 2
        total = np.zeros(omega.shape, dtype=complex)
        for k in range(n):
            g_k = 2.0 * betas[k]
            g_k_omega = 2.0 * betas[k] / (1.0 - 2.0j * omega / GAMMA)
            generated = -(carried[k] ** 2) * 2.0 * g_k * np.abs(g_k_omega) ** 2 / (betas[k] * GAMMA)
            total = total * loss + generated
        return alpha_in_sq * total

    alpha = input_amplitude(p, 1.0) * (np.prod(t_eff) if n else 1.0)
    flags = set()
    if n and betas.max() > 0.1:
        flags.add(FLAG_EFFECTIVE_COUPLING)
    if n and betas.max() >= 1.0:
        flags.add(FLAG_UNPHYSICAL_COUPLING)
    return _ensemble(p, drive, grid, Geometry.COMBINED, alpha, spectrum, flags)


def respond(p: EmitterParams, drive: DriveConfig,
            grid: Optional[FrequencyGrid] = None) -> TwoPhotonResponse:
    """Dispatch to the solver for ``drive.mode``."""
    if drive.mode is Geometry.EXTERNAL_SINGLE:
        return response_external(p, drive)
    solver = {
        Geometry.WAVEGUIDE: waveguide_chain,
        Geometry.BRAGG: bragg_chain,
        Geometry.ANTI_BRAGG: antibragg_chain,
        Geometry.COMBINED: combined_chain,
    }[drive.mode]
    return solver(p, drive, grid)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    n_samples: int
    n_emitters: int
    seed: int


MIN_MC_SAMPLES = 100


def random_distance_g2_mc(p: EmitterParams, drive: DriveConfig, n_samples: int, seed: int,
                          chunk_size: int = 10_000, pair_scale: float = 0.5) -> MonteCarloEstimate:
    """g2(0) of side-illuminated emitters at random positions, optically thin limit.

    Each sample draws independent uniform phases phi_i.  The coherent
    amplitude is sum exp(i phi_i) and the zero-delay pair amplitude is its
    square minus the per-emitter terms sum exp(2 i phi_i), the latter
    cancelled by each emitter's own incoherent pair.  The pair intensity is
    weighted by ``pair_scale``.  Chunks draw from independent child seeds,
    so the result depends only on ``seed`` and ``chunk_size``.
    """
    if n_samples < MIN_MC_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_MC_SAMPLES}, got {n_samples}")
    if p.delta != 0.0:
        raise UnsupportedGeometry("random-distance average is modelled on resonance only")
    n = drive.n_emitters
    if n < 1:
        raise ValueError("need at least one emitter")

    sizes = [chunk_size] * (n_samples // chunk_size)
    if n_samples % chunk_size:
        sizes.append(n_samples % chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    pair, power = [], []
    for size, child in zip(sizes, children):
        rng = np.random.default_rng(child)
        z = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(size, n)))
        s = z.sum(axis=1)
        pair.append(pair_scale * np.abs(s * s - (z * z).sum(axis=1)) ** 2)
        power.append(np.abs(s) ** 2)
    x = np.concatenate(pair)
    y = np.concatenate(power)

    mx, my = x.mean(), y.mean()
    g2 = mx / my**2
    # delta method for the ratio of means
    cov = np.cov(x, y)
    var = (cov[0, 0] / my**4 - 4.0 * mx * cov[0, 1] / my**5 + 4.0 * mx**2 * cov[1, 1] / my**6)
    stderr = math.sqrt(max(var, 0.0) / n_samples)
    return MonteCarloEstimate(float(g2), stderr, n_samples, n, seed)
