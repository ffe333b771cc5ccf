"""Ensemble integrator: velocity-Verlet motion on the state-dependent
bipotential plus Poissonian sublevel jumps with recoil kicks.

One step per atom is
  1. a velocity-Verlet step under force(r, t, s) with M = 1/2 (one fresh
     field evaluation per step; the first half-kick reuses the previous
     step's),
  2. a Bernoulli jump trial with probability gamma_{s->-s}(r_new) * dt;
     on a jump s flips in place and, with recoil on, the momentum gets two
     unit kicks along independent isotropic directions (absorption plus
     spontaneous emission).

The time step must satisfy dt * max(Omega_x, Gamma_p) <= 0.05, which keeps
both the integrator and the first-order jump sampling accurate (the jump
probability stays below 2*Gamma_p*dt/9 ~ 0.011 at the bound).

All randomness flows through per-atom counter-based streams (rng.py), so a
run is a pure function of (config, lattice, modulation): atoms never
interact, each one consumes only its own stream, and the compiled inner
loop (_kernels.py) writes only to the owning atom's slot -- results are
bitwise identical for any thread count or scheduling.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy.special import ndtri

from . import __version__
from ._kernels import integrate
from .model import Configuration, LatticeSpec, ModulationSpec, vibrational_frequency
from .rng import AtomStreams

__all__ = ["SimConfig", "Ensemble", "EnsembleSeries", "initialize", "step", "run",
           "STABILITY_BOUND", "INIT_DRAWS"]

# dt * max(Omega_x, Gamma_p) must stay below this
STABILITY_BOUND = 0.05
# counter value every atom starts the dynamics with (initialization headroom)
INIT_DRAWS = 16


@dataclass(frozen=True)
class SimConfig:
    """Run parameters (all in natural units)."""

    n_atoms: int
    dt: float
    n_steps: int
    t_thermalize: float
    seed: int
    snapshot_stride: int = 10
    initial_temperature: float = 3.0  # momentum spread, hbar*k
    recoil_kicks: bool = True
    cloud_cells: int = 8  # cloud width, lattice cells per axis

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")
        if self.t_thermalize < 0.0:
            raise ValueError(f"t_thermalize must be >= 0, got {self.t_thermalize}")
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        if self.initial_temperature < 0.0:
            raise ValueError(f"initial_temperature must be >= 0, got {self.initial_temperature}")
        if self.cloud_cells < 1:
            raise ValueError(f"cloud_cells must be >= 1, got {self.cloud_cells}")

    def check_stability(self, lat: LatticeSpec) -> None:
        """Enforce dt * max(Omega_x, Gamma_p) <= STABILITY_BOUND."""
        scale = max(vibrational_frequency(lat), lat.Gamma_p)
        if self.dt * scale > STABILITY_BOUND * (1.0 + 1e-12):
            raise ValueError(
                f"dt={self.dt} too large: dt*max(Omega_x, Gamma_p)="
                f"{self.dt * scale:.4g} exceeds {STABILITY_BOUND}")


@dataclass
class Ensemble:
    """Phase-space arrays: r, p are (N, 3); s is (N,) float of +-1."""

    r: np.ndarray
    p: np.ndarray
    s: np.ndarray

    @property
    def n_atoms(self) -> int:
        return self.r.shape[0]

    def copy(self) -> "Ensemble":
        return Ensemble(self.r.copy(), self.p.copy(), self.s.copy())


@dataclass
class EnsembleSeries:
    """Snapshots of one run: times (T,), r/p (T, N, 3), s (T, N) int8.

    metadata carries the full config echo, a provenance hash, and the
    phase-1 kinetic-energy record used by the equilibration check.
    """

    times: np.ndarray
    r: np.ndarray
    p: np.ndarray
    s: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def n_snapshots(self) -> int:
        return self.times.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.r.shape[1]


def _config_echo(cfg: SimConfig, lat: LatticeSpec, mod: Optional[ModulationSpec]) -> dict:
    echo = {"sim": asdict(cfg), "lattice": asdict(lat)}
    if mod is not None:
        m = asdict(mod)
        m["kind"] = mod.kind.value
        echo["modulation"] = m
    return echo


def _provenance(echo: dict) -> str:
    blob = json.dumps(echo, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def initialize(cfg: SimConfig, lat: LatticeSpec) -> tuple[Ensemble, AtomStreams]:
    """Sample the starting ensemble.

    Positions: uniform over one lattice cell, offset to a random cell index
    in [-cloud_cells//2, cloud_cells - cloud_cells//2) per axis.  Momenta:
    Gaussian with spread initial_temperature.  Sublevel: the locally
    lower-energy one with probability 0.9 (ties resolve to +1), so the
    ensemble starts predominantly trapped.

    Draw layout per atom (counters 0..9, then skipped to INIT_DRAWS):
    0-2 cell fraction, 3-5 cell index, 6-8 momentum, 9 sublevel.
    """
    streams = AtomStreams(cfg.seed, cfg.n_atoms)

    u_frac = np.stack([streams.uniform_all() for _ in range(3)], axis=1)
    u_cell = np.stack([streams.uniform_all() for _ in range(3)], axis=1)
    u_mom = np.stack([streams.uniform_all() for _ in range(3)], axis=1)
    u_state = streams.uniform_all()
    streams.skip_to(INIT_DRAWS)

    periods = np.array([lat.lambda_x, lat.lambda_y, lat.lambda_z])
    cells = np.floor(u_cell * cfg.cloud_cells) - cfg.cloud_cells // 2
    r = (u_frac + cells) * periods[None, :]

    if cfg.initial_temperature > 0.0:
        # +2^-54 keeps ndtri off the u = 0 singularity without biasing [0,1)
        p = cfg.initial_temperature * ndtri(u_mom + 2.0 ** -54)
    else:
        p = np.zeros_like(u_mom)

    # lower-energy sublevel maximizes s * cx*cy*cz
    cx = np.cos(lat.kappa_perp * r[:, 0])
    cy = np.cos(lat.kappa_perp * r[:, 1])
    cz = np.cos(lat.kappa_z * r[:, 2])
    s_low = np.where(cx * cy * cz >= 0.0, 1.0, -1.0)
    s = np.where(u_state < 0.9, s_low, -s_low)

    return Ensemble(r=r, p=p, s=s), streams


class _State:
    """Contiguous per-coordinate views of an ensemble for the kernel."""

    def __init__(self, ens: Ensemble, streams: AtomStreams):
        self.x = np.ascontiguousarray(ens.r[:, 0])
        self.y = np.ascontiguousarray(ens.r[:, 1])
        self.z = np.ascontiguousarray(ens.r[:, 2])
        self.px = np.ascontiguousarray(ens.p[:, 0])
        self.py = np.ascontiguousarray(ens.p[:, 1])
        self.pz = np.ascontiguousarray(ens.p[:, 2])
        self.s = np.ascontiguousarray(ens.s, dtype=float)
        self.keys = streams.keys
        self.counters = streams.counters

    def to_ensemble(self) -> Ensemble:
        return Ensemble(r=np.stack([self.x, self.y, self.z], axis=1),
                        p=np.stack([self.px, self.py, self.pz], axis=1),
                        s=self.s)


def _dummies(n: int):
    f = np.empty((0, n))
    return f, f, f, f, f, f, np.empty((0, n), dtype=np.int8), np.empty((0, n))


def _kernel_args(lat: LatticeSpec, mod: Optional[ModulationSpec], dt: float):
    """Scalar physics constants for the kernel; with_mod selects whether the
    pattern term is evaluated at all."""
    u0 = lat.U0
    kp = lat.kappa_perp
    kz = lat.kappa_z
    ce = -(u0 / 3.0) * kp
    co = -(u0 / 6.0) * kp
    czf = -(u0 / 6.0) * kz
    gdt18 = lat.Gamma_p * dt / 18.0
    if mod is not None and mod.epsilon > 0.0:
        return (kp, kz, ce, co, czf, gdt18, True, mod.delta_k, mod.delta,
                0.5 * mod.epsilon * u0 * mod.delta_k,
                mod.kind is Configuration.PARALLEL, mod.rate_modulation)
    return (kp, kz, ce, co, czf, gdt18, False, 0.0, 0.0, 0.0, True, 0.0)


def step(ens: Ensemble, lat: LatticeSpec, mod: Optional[ModulationSpec],
         t: float, dt: float, rng: AtomStreams, *,
         recoil_kicks: bool = True, rate_override: Optional[float] = None,
         ) -> tuple[Ensemble, AtomStreams]:
    """Advance a copy of the ensemble by one step (the loop in `run` does
    exactly this, with the field evaluation shared between steps)."""
    rng = rng.copy()
    st = _State(ens.copy(), rng)
    args = _kernel_args(lat, mod, dt)
    rate_dt = -1.0 if rate_override is None else rate_override * dt
    integrate(st.x, st.y, st.z, st.px, st.py, st.pz, st.s, st.keys, st.counters,
              *args, recoil_kicks, rate_dt, t, dt, 1, 2, True, *_dummies(ens.n_atoms))
    return st.to_ensemble(), rng


def run(cfg: SimConfig, lat: LatticeSpec, mod: Optional[ModulationSpec],
        rate_override: Optional[float] = None) -> EnsembleSeries:
    """Thermalize with the modulation off, then integrate n_steps with it on.

    t is reset to zero at modulation switch-on so the pattern phase origin
    is reproducible across runs.  Snapshots (phase 2 only) are recorded at
    t = 0 and then every snapshot_stride steps.  rate_override is a test
    hook: it replaces the position-dependent pumping rate with a uniform
    one (0.0 disables jumps entirely).
    """
    cfg.check_stability(lat)
    dt, stride, n = cfg.dt, cfg.snapshot_stride, cfg.n_atoms
    rate_dt = -1.0 if rate_override is None else rate_override * dt

    ens, streams = initialize(cfg, lat)
    st = _State(ens, streams)

    # phase 1: bare lattice; per-atom kinetic energy recorded every stride
    # steps for the equilibration check (KE = |p|^2 for M = 1/2)
    n_therm = int(round(cfg.t_thermalize / dt))
    n_ke = n_therm // stride
    ke_out = np.empty((n_ke, n))
    off_args = _kernel_args(lat, None, dt)
    integrate(st.x, st.y, st.z, st.px, st.py, st.pz, st.s, st.keys, st.counters,
              *off_args, cfg.recoil_kicks, rate_dt, 0.0, dt, n_therm, stride,
              False, *_dummies(n)[:7], ke_out)

    # phase 2: modulation on, t reset to 0
    n_snap = cfg.n_steps // stride + 1
    snap = [np.empty((n_snap, n)) for _ in range(6)]
    snap_s = np.empty((n_snap, n), dtype=np.int8)
    snap[0][0], snap[1][0], snap[2][0] = st.x, st.y, st.z
    snap[3][0], snap[4][0], snap[5][0] = st.px, st.py, st.pz
    snap_s[0] = st.s
    on_args = _kernel_args(lat, mod, dt)
    integrate(st.x, st.y, st.z, st.px, st.py, st.pz, st.s, st.keys, st.counters,
              *on_args, cfg.recoil_kicks, rate_dt, 0.0, dt, cfg.n_steps, stride,
              True, *snap, snap_s, np.empty((0, n)))

    # (j*stride)*dt reproduces the kernel's time values exactly
    times = (np.arange(n_snap) * stride) * dt
    r_out = np.stack(snap[:3], axis=2)
    p_out = np.stack(snap[3:], axis=2)

    echo = _config_echo(cfg, lat, mod)
    meta = {
        "config": echo,
        "provenance": _provenance(echo),
        "package_version": __version__,
        "n_therm_steps": n_therm,
        "therm_times": (np.arange(1, n_ke + 1) * (stride * dt)),
        "therm_kinetic": ke_out.mean(axis=1) if n_ke else np.empty(0),
    }
    return EnsembleSeries(times=times, r=r_out, p=p_out, s=snap_s, metadata=meta)
