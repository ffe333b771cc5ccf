"""Lattice geometry, state-dependent bipotentials, pumping rates, and the
moving pump-probe modulation.

Conventions (natural units, used by every formula in the package):
    hbar = 1, laser wavenumber k = 1, recoil energy E_r = hbar^2 k^2 / 2M = 1,
    hence the atomic mass is M = 1/2 and time is measured in 1/omega_r.

Geometry of the four-beam 3D lin-perp-lin lattice, with 2*theta the angle
between each beam pair:
    kappa_perp = sin(theta)      transverse wavenumber (x and y)
    kappa_z    = 2 cos(theta)    longitudinal wavenumber
    lambda_x = lambda_y = 2*pi/kappa_perp,  lambda_z = 2*pi/kappa_z

The sigma+/sigma- intensity lattices are
    I_pm(r) = cos^2(kx*x) + cos^2(kx*y) +- 2 cos(kx*x) cos(kx*y) cos(kz*z)
with a pure sigma+ site at the origin (I_+ = 4, I_- = 0 there).  For the
J_g = 1/2 ground state the two sublevels s = +-1 see the bipotential

    U_s(r) = -(U0/8) * [ I_s(r) + (1/3) I_{-s}(r) ]
           = -(U0/6) * [ cos^2(kx*x) + cos^2(kx*y) + s * cx*cy*cz ]

(Clebsch-Gordan weights 1 and 1/3), and optical pumping flips s -> -s at

    gamma_{s->-s}(r) = (2*Gamma_p/9) * I_{-s}(r)/4.

Two extra beams at half-angle phi add a moving modulation with pattern
wavenumber delta_k = 2 sin(phi) along x and phase Phi = delta_k*x - delta*t:
in the "parallel" configuration both sublevel potentials are modulated in
phase, in the "perp" configuration in phase opposition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

__all__ = [
    "M_ATOM",
    "Configuration",
    "LatticeSpec",
    "ModulationSpec",
    "AtomState",
    "intensity_components",
    "potential",
    "pump_rate",
    "modulation_potential",
    "total_potential",
    "force",
    "vibrational_frequency",
    "field_terms",
    "FieldTerms",
]

# atomic mass in natural units (E_r = hbar = k = 1)
M_ATOM = 0.5


class Configuration(str, Enum):
    """Pump-probe beam configuration: intensity vs polarization modulation."""

    PARALLEL = "parallel"
    PERP = "perp"


@dataclass(frozen=True)
class LatticeSpec:
    """Static lattice: half-angle theta (rad), depth scale U0 (E_r, > 0) and
    optical-pumping rate scale Gamma_p (omega_r, > 0)."""

    theta: float
    U0: float
    Gamma_p: float

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi / 2:
            raise ValueError(f"theta must be in (0, pi/2), got {self.theta}")
        if self.U0 <= 0.0:
            raise ValueError(f"U0 must be > 0, got {self.U0}")
        if self.Gamma_p <= 0.0:
            raise ValueError(f"Gamma_p must be > 0, got {self.Gamma_p}")

    @property
    def kappa_perp(self) -> float:
        return math.sin(self.theta)

    @property
    def kappa_z(self) -> float:
        return 2.0 * math.cos(self.theta)

    @property
    def lambda_x(self) -> float:
        return 2.0 * math.pi / self.kappa_perp

    @property
    def lambda_y(self) -> float:
        return 2.0 * math.pi / self.kappa_perp

    @property
    def lambda_z(self) -> float:
        return 2.0 * math.pi / self.kappa_z


@dataclass(frozen=True)
class ModulationSpec:
    """Moving modulation: configuration kind, pump-probe half-angle phi (rad),
    relative amplitude epsilon (in units of U0, >= 0) and detuning delta
    (omega_r, signed).

    rate_modulation (perp only) adds the moving polarization pattern's own
    pumping channel: the pattern's sigma-+/sigma-- lobes pump each sublevel
    at (2*Gamma_p/9) * rate_modulation * (1 - s*cos(Phi))/2 on top of the
    lattice rate, reaching atoms even at their (lattice-dark) well bottoms.
    0 disables it.
    """

    kind: Configuration
    phi: float
    epsilon: float
    delta: float
    rate_modulation: float = 0.0

    def __post_init__(self):
        # tolerate plain strings for kind
        if not isinstance(self.kind, Configuration):
            object.__setattr__(self, "kind", Configuration(self.kind))
        if not 0.0 < self.phi < math.pi / 2:
            raise ValueError(f"phi must be in (0, pi/2), got {self.phi}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0.0 <= self.rate_modulation <= 1.0:
            raise ValueError(f"rate_modulation must be in [0, 1], got {self.rate_modulation}")
        if self.rate_modulation > 0.0 and self.kind is not Configuration.PERP:
            raise ValueError("rate_modulation only applies to the perp configuration")

    @property
    def delta_k(self) -> float:
        """Pattern wavenumber |Delta k| = 2 sin(phi) (units of k)."""
        return 2.0 * math.sin(self.phi)

    def off(self) -> "ModulationSpec":
        """Same geometry with the modulation switched off entirely."""
        return ModulationSpec(self.kind, self.phi, 0.0, self.delta, 0.0)


@dataclass
class AtomState:
    """One atom: position r (1/k), momentum p (hbar*k), sublevel s = +-1."""

    r: np.ndarray
    p: np.ndarray
    s: int

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.s not in (-1, 1):
            raise ValueError(f"s must be +1 or -1, got {self.s}")


def _split_xyz(r):
    r = np.asarray(r, dtype=float)
    return r[..., 0], r[..., 1], r[..., 2]


def intensity_components(lat: LatticeSpec, r) -> tuple[np.ndarray, np.ndarray]:
    """sigma+ and sigma- intensities at r (each in [0, 4]); r is (..., 3)."""
    x, y, z = _split_xyz(r)
    cx = np.cos(lat.kappa_perp * x)
    cy = np.cos(lat.kappa_perp * y)
    cz = np.cos(lat.kappa_z * z)
    a = cx * cx + cy * cy
    b = 2.0 * cx * cy * cz
    return a + b, a - b


def potential(lat: LatticeSpec, r, s) -> np.ndarray:
    """Static bipotential U_s(r) in E_r; minimum -U0/2 at matching sites."""
    x, y, z = _split_xyz(r)
    s = np.asarray(s, dtype=float)
    cx = np.cos(lat.kappa_perp * x)
    cy = np.cos(lat.kappa_perp * y)
    cz = np.cos(lat.kappa_z * z)
    return -(lat.U0 / 6.0) * (cx * cx + cy * cy + s * cx * cy * cz)


def pump_rate(lat: LatticeSpec, r, s) -> np.ndarray:
    """Optical pumping rate s -> -s, driven by the opposite-helicity
    intensity: (2*Gamma_p/9) * I_{-s}/4, in [0, 2*Gamma_p/9]."""
    i_plus, i_minus = intensity_components(lat, r)
    s = np.asarray(s, dtype=float)
    i_opp = np.where(s > 0, i_minus, i_plus)
    return (lat.Gamma_p / 18.0) * i_opp


def modulated_pump_rate(lat: LatticeSpec, mod: ModulationSpec, r, t, s) -> np.ndarray:
    """Pump rate including the polarization pattern's own pumping channel
    (2*Gamma_p/9) * rate_modulation * (1 - s*cos(Phi))/2; equals pump_rate
    when the channel is disabled."""
    base = pump_rate(lat, r, s)
    if mod.rate_modulation == 0.0 or mod.epsilon == 0.0:
        return base
    x, _, _ = _split_xyz(r)
    s = np.asarray(s, dtype=float)
    cphi = np.cos(mod.delta_k * x - mod.delta * np.asarray(t, dtype=float))
    return base + (lat.Gamma_p / 9.0) * mod.rate_modulation * (1.0 - s * cphi)


def modulation_potential(lat: LatticeSpec, mod: ModulationSpec, r, t, s) -> np.ndarray:
    """Moving modulation energy at phase Phi = delta_k*x - delta*t.

    parallel: -(eps*U0/2) cos(Phi) for both sublevels (in phase);
    perp:     -s*(eps*U0/2) cos(Phi) (phase opposition).
    """
    x, _, _ = _split_xyz(r)
    s = np.asarray(s, dtype=float)
    amp = 0.5 * mod.epsilon * lat.U0
    cphi = np.cos(mod.delta_k * x - mod.delta * np.asarray(t, dtype=float))
    if mod.kind is Configuration.PARALLEL:
        return -amp * cphi * np.ones_like(s)
    return -amp * s * cphi


def total_potential(lat: LatticeSpec, mod: ModulationSpec | None, r, t, s) -> np.ndarray:
    """Static bipotential plus modulation (the energy the force derives from)."""
    if mod is None:
        return potential(lat, r, s)
    return potential(lat, r, s) + modulation_potential(lat, mod, r, t, s)


class FieldTerms(NamedTuple):
    """Force and rate ingredients split by sublevel parity.

    force = f_even + s * f_odd;  I_{-s} = i_even - s * i_odd;
    U_s + dU_s = u_even + s * u_odd.  Splitting them this way lets the
    integrator re-combine after a sublevel flip without re-evaluating trig.
    """

    f_even: np.ndarray
    f_odd: np.ndarray
    i_even: np.ndarray
    i_odd: np.ndarray
    u_even: np.ndarray
    u_odd: np.ndarray


def field_terms(lat: LatticeSpec, mod: ModulationSpec | None, r, t) -> FieldTerms:
    """Evaluate all sublevel-independent field quantities at (r, t).

    mod=None (or epsilon = 0) gives the bare lattice.  This is the single
    implementation the `force`, the integrator, and the jump rates share.
    """
    x, y, z = _split_xyz(r)
    kp = lat.kappa_perp
    kz = lat.kappa_z
    u6 = lat.U0 / 6.0

    ax = kp * x
    ay = kp * y
    az = kz * z
    cx = np.cos(ax)
    sx = np.sin(ax)
    cy = np.cos(ay)
    sy = np.sin(ay)
    cz = np.cos(az)
    sz = np.sin(az)

    cxcy = cx * cy
    # even/odd parts of the intensities: I_pm = i_even +- i_odd
    i_even = cx * cx + cy * cy
    i_odd = 2.0 * cxcy * cz

    # force = -grad(U_s); U_s = -u6*(cx^2 + cy^2 + s*cx*cy*cz)
    shape = np.broadcast(x, y, z).shape
    f_even = np.empty(shape + (3,), dtype=float)
    f_odd = np.empty(shape + (3,), dtype=float)
    f_even[..., 0] = -u6 * kp * sx * (2.0 * cx)
    f_even[..., 1] = -u6 * kp * sy * (2.0 * cy)
    f_even[..., 2] = 0.0
    f_odd[..., 0] = -u6 * kp * sx * cy * cz
    f_odd[..., 1] = -u6 * kp * sy * cx * cz
    f_odd[..., 2] = -u6 * kz * cxcy * sz

    u_even = -u6 * i_even
    u_odd = -u6 * cxcy * cz

    if mod is not None and mod.epsilon != 0.0:
        amp = 0.5 * mod.epsilon * lat.U0
        phi = mod.delta_k * x - mod.delta * t
        cphi = np.cos(phi)
        sphi = np.sin(phi)
        # dU = -amp*cos(Phi) (parallel, even in s) or -s*amp*cos(Phi) (perp)
        if mod.kind is Configuration.PARALLEL:
            u_even = u_even - amp * cphi
            f_even[..., 0] -= amp * mod.delta_k * sphi
        else:
            u_odd = u_odd - amp * cphi
            f_odd[..., 0] -= amp * mod.delta_k * sphi

    return FieldTerms(f_even, f_odd, i_even, i_odd, u_even, u_odd)


def force(lat: LatticeSpec, mod: ModulationSpec | None, r, t, s) -> np.ndarray:
    """Exact analytic force -grad(U_s + dU_s) at (r, t); shape (..., 3)."""
    ft = field_terms(lat, mod, r, t)
    s = np.asarray(s, dtype=float)
    return ft.f_even + s[..., None] * ft.f_odd


def vibrational_frequency(lat: LatticeSpec) -> float:
    """Harmonic x frequency at a well bottom: Omega_x = kappa_perp*sqrt(U0).

    From U_+ ~ -U0/2 + (U0/4) kappa_perp^2 x^2 near a sigma+ site and
    (1/2) M Omega_x^2 = U0 kappa_perp^2 / 4 with M = 1/2.
    """
    return lat.kappa_perp * math.sqrt(lat.U0)
