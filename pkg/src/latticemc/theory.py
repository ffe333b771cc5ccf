"""Closed-form predictions for the propagation-mode kinematics.

Everything here is exact algebra in natural units (k = 1, so the optical
wavelength is 2*pi).  These functions are the oracle layer the simulation
observables are tested against; they must stay independent of the Monte
Carlo machinery.

  mode velocity        v_bar   = Omega_x / sin(theta)
  pattern velocity     v_mod   = delta / (2 sin(phi))
  resonance detunings  parallel: delta = +-(2 sin(phi)/sin(theta)) Omega_x
                       perp:     delta = +-(1 + 2 sin(phi)/sin(theta)) Omega_x
  grating wavevector   parallel: |q| = |Delta k| = 2 sin(phi)
                       perp:     |q| = 2 sin(phi) + sin(theta)

The perp grating violates the pump-probe phase-matching condition by
exactly sin(theta) for every phi: the mode is excited but dark.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Configuration

__all__ = [
    "PHASE_MATCH_TOL",
    "ResonancePrediction",
    "GratingPrediction",
    "mode_velocity",
    "modulation_velocity",
    "resonance_detunings",
    "grating_wavevector",
    "phase_matching_residual",
]

# analytic zero vs floating-point noise
PHASE_MATCH_TOL = 1e-9


def _check_angle(name: str, value: float) -> None:
    if not 0.0 < value < math.pi / 2:
        raise ValueError(f"{name} must be in (0, pi/2), got {value}")


@dataclass(frozen=True)
class ResonancePrediction:
    """Resonant detunings (+,-) and velocities for one configuration."""

    kind: Configuration
    delta_res: tuple[float, float]
    v_mode: float
    v_mod_res: tuple[float, float]


@dataclass(frozen=True)
class GratingPrediction:
    """Material-grating wavenumber and its phase-matching bookkeeping."""

    kind: Configuration
    q_magnitude: float
    mismatch: float
    phase_matched: bool


def mode_velocity(theta: float, omega_x: float) -> float:
    """Mean speed of the half-oscillation/pump sequence along x."""
    _check_angle("theta", theta)
    if omega_x <= 0.0:
        raise ValueError(f"omega_x must be > 0, got {omega_x}")
    return omega_x / math.sin(theta)


def modulation_velocity(delta: float, phi: float) -> float:
    """Phase velocity of the moving pump-probe pattern (sign follows delta)."""
    _check_angle("phi", phi)
    return delta / (2.0 * math.sin(phi))


def resonance_detunings(kind: Configuration, phi: float, theta: float,
                        omega_x: float) -> ResonancePrediction:
    """Detunings at which the moving pattern drags the propagation mode."""
    kind = Configuration(kind)
    _check_angle("phi", phi)
    v_bar = mode_velocity(theta, omega_x)  # validates theta, omega_x
    ratio = 2.0 * math.sin(phi) / math.sin(theta)
    if kind is Configuration.PARALLEL:
        delta = ratio * omega_x
        v_res = v_bar
    else:
        delta = (1.0 + ratio) * omega_x
        v_res = (1.0 + math.sin(theta) / (2.0 * math.sin(phi))) * v_bar
    return ResonancePrediction(kind=kind, delta_res=(delta, -delta),
                               v_mode=v_bar, v_mod_res=(v_res, -v_res))


def grating_wavevector(kind: Configuration, phi: float, theta: float) -> GratingPrediction:
    """Wavenumber of the material grating implied by the dispersion relation
    Omega = v_bar * |q| with Omega the resonant detuning."""
    kind = Configuration(kind)
    _check_angle("phi", phi)
    _check_angle("theta", theta)
    delta_k = 2.0 * math.sin(phi)
    if kind is Configuration.PARALLEL:
        q = delta_k
    else:
        q = delta_k + math.sin(theta)
    mismatch = q - delta_k
    return GratingPrediction(kind=kind, q_magnitude=q, mismatch=mismatch,
                             phase_matched=abs(mismatch) < PHASE_MATCH_TOL)


def phase_matching_residual(kind: Configuration, phi: float, theta: float) -> float:
    """|q| - |Delta k| along x: zero iff stimulated scattering off the
    grating is allowed (bright); positive for the dark perp mode."""
    return grating_wavevector(kind, phi, theta).mismatch
