"""Semiclassical Monte Carlo of propagation modes in a dissipative
3D lin-perp-lin optical lattice under a moving pump-probe modulation."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Configuration,
    LatticeSpec,
    ModulationSpec,
    AtomState,
    intensity_components,
    potential,
    pump_rate,
    modulation_potential,
    total_potential,
    force,
    vibrational_frequency,
)
from .theory import (  # noqa: F401
    ResonancePrediction,
    GratingPrediction,
    mode_velocity,
    modulation_velocity,
    resonance_detunings,
    grating_wavevector,
    phase_matching_residual,
)
from .engine import SimConfig, Ensemble, EnsembleSeries, initialize, step, run  # noqa: F401
from .rng import rng_stream, derive_seed  # noqa: F401
from .units import UnitSystem  # noqa: F401
