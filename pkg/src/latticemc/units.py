"""Mapping between the simulator's natural units and SI.

The core works in hbar = k = E_r = 1 (M = 1/2, time in 1/omega_r); SI
enters only at the boundary, parameterized by a laser wavelength and an
atomic mass.  The stock instance is Rb-85 at 780 nm, for which
omega_r = hbar k^2 / 2M ~ 2*pi * 3.86 kHz.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants

__all__ = ["UnitSystem", "RB85_MASS_KG"]

RB85_MASS_KG = 84.911789738 * constants.atomic_mass


@dataclass(frozen=True)
class UnitSystem:
    """SI boundary for a given laser wavelength (m) and atomic mass (kg)."""

    wavelength: float = 780e-9
    mass: float = RB85_MASS_KG

    @classmethod
    def rb85_d2(cls) -> "UnitSystem":
        return cls()

    @property
    def k_si(self) -> float:
        """Laser wavenumber, 1/m."""
        return 2.0 * math.pi / self.wavelength

    @property
    def recoil_energy_j(self) -> float:
        return (constants.hbar * self.k_si) ** 2 / (2.0 * self.mass)

    @property
    def omega_r(self) -> float:
        """Recoil angular frequency, rad/s (the natural time unit is 1/omega_r)."""
        return constants.hbar * self.k_si ** 2 / (2.0 * self.mass)

    @property
    def velocity_unit(self) -> float:
        """m/s per natural velocity unit (omega_r / k)."""
        return self.omega_r / self.k_si

    def velocity_to_si(self, v: float) -> float:
        return v * self.velocity_unit

    def frequency_to_si_rad_s(self, omega: float) -> float:
        return omega * self.omega_r

    def frequency_to_si_hz(self, omega: float) -> float:
        return omega * self.omega_r / (2.0 * math.pi)

    def frequency_from_si_rad_s(self, omega_si: float) -> float:
        return omega_si / self.omega_r

    def length_to_si(self, x: float) -> float:
        return x / self.k_si

    def time_to_si(self, t: float) -> float:
        return t / self.omega_r

    def summary(self) -> dict:
        """Conversion constants for export (plot scripts must not recompute)."""
        return {
            "wavelength_m": self.wavelength,
            "mass_kg": self.mass,
            "omega_r_rad_s": self.omega_r,
            "omega_r_hz": self.omega_r / (2.0 * math.pi),
            "velocity_unit_m_s": self.velocity_unit,
            "length_unit_m": 1.0 / self.k_si,
        }
