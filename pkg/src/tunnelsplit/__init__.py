"""Transmission/reflection decomposition of 1D completed scattering and the
characteristic times of each subensemble."""

from .barrier import (NATURAL, RectangularBarrier, Regime, SampledSymmetricBarrier,
                      TunnelingParams, UnitsContext, kappa_of, potential_at,
                      rect_tunneling_params)
from .stationary import (ODESettings, StationaryDecomposition, probability_flux,
                         scattering_state, stationary_decompose, stationary_full,
                         tunneling_params)
from .times import CharacteristicTimes, characteristic_times
from .wavepacket import (GaussianSpec, ScatteringPacket, build_kgrid, larmor_time_spectral,
                         larmor_time_timeintegral, packet_xgrid)
from .larmor import SpinorPacket, precession_rate, shifted_barrier, stationary_clock_offsets

__version__ = "0.1.0"
