"""Two-photon output of emitter chains chirally coupled to a waveguide, to leading order in the drive."""

from .core import (DriveConfig, EmitterParams, Geometry, coherent_scattering_amplitude,
                   input_amplitude, optical_depth, optical_depth_small_beta,
                   photon_generation_coefficient, transmission_coefficient)
from .ensemble import (BraggGeometry, MonteCarloEstimate, anti_bragg_angle, antibragg_chain,
                       bragg_angle, bragg_chain, combined_chain, effective_couplings,
                       random_distance_g2_mc, respond, waveguide_chain, waveguide_chain_direct)
from .errors import (ConfigError, GridTruncation, ModelError, NoPhysicalAngle, SaturationError,
                     UnsupportedGeometry)
from .grid import FrequencyGrid
from .observables import (CorrelationTrace, SqueezingSpectrum, TimeSamples, antibunching_point,
                          approx_g2_zero, approx_large_od_spectrum, approx_low_od_spectrum,
                          approx_psi_zero_large_od, freq_to_time, g2_trace, g2_zero, g2_zero_sweep,
                          psi_incoh_at_zero, squeezing_spectrum)
from .response import EnsembleResponse, SingleEmitterResponse, TwoPhotonResponse
from .single_emitter import (incoherent_freq, incoherent_time, response_combined, response_external,
                             response_waveguide)

__all__ = [name for name in dir() if not name.startswith("_")]
