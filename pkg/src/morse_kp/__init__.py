"""Klauder-Perelomov coherent states of the Morse oscillator and the
statistics of a canonical gas of Morse oscillators seen through them."""

from .errors import ConsistencyError, DomainError, NumericalError
from .spectrum import (
    MorseSpace,
    ThermalParams,
    dimensional_energy,
    make_space,
    molecule_preset,
    thermal_params,
)
from .coherent import (
    CoherentState,
    MeasureDensity,
    closed_form_state,
    displaced_state,
    evolve,
    identity_resolution_check,
    overlap,
)
from .statistics import action_identity, expectation, g2, mandel_q, moment_n
from .thermal import (
    husimi,
    p_function,
    partition,
    thermal_g2,
    thermal_mandel,
    thermal_moment,
    thermal_state,
    thermodynamics,
)

__version__ = "0.1.0"
