"""Experiment orchestration: configuration files, sweep execution,
analysis, and deterministic persistence.

Experiments (mirroring the measurement protocols):
  predict            closed-form predictions only
  scan-delta         v_cm,x vs detuning for one configuration
  scan-angle         resonance positions vs pump-probe half-angle, both
                     configurations, with line fits
  density-profile    moving-frame density profiles and grating wavevectors
                     at the predicted resonances, both configurations
  transmission-scan  phase-matched scattering proxy vs detuning around the
                     predicted resonance, plus a modulation-off floor run

Configuration files are YAML (all keys optional; unknown keys are
rejected).  Angles are given in degrees, detunings in units of Omega_x by
default.  Every persisted summary carries the theory predictions next to
the simulated values, and byte-identical outputs follow from identical
configs (wall-clock goes to a sidecar log, never into the summary).
"""
from __future__ import annotations

import json
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__, theory
from .engine import STABILITY_BOUND, EnsembleSeries, SimConfig, run
from .model import Configuration, LatticeSpec, ModulationSpec, vibrational_frequency
from .observables import (DensityProfile, ResonanceCurve, cm_velocity,
                          equilibration_ok, grating_wavevector_estimate,
                          moving_frame_density, resonance_scan_analyze,
                          transmission_proxy)
from .rng import derive_seed
from .units import UnitSystem

__all__ = ["ExperimentConfig", "RunRecord", "load_config", "parse_config",
           "dump_config", "default_config", "run_experiment", "run_delta_sweep",
           "run_angle_sweep", "run_density_profile", "run_transmission_scan",
           "predict", "export", "read_summary", "read_csv"]

SCHEMA_VERSION = "1"

EXPERIMENTS = ("predict", "scan-delta", "scan-angle", "density-profile", "transmission-scan")

# configuration schema: section -> key -> (type, default)
_SCHEMA = {
    "lattice": {
        "theta_deg": 30.0,
        "U0": 200.0,
        "Gamma_p": None,  # default: Omega_x (strong-pumping regime)
    },
    "modulation": {
        "kind": "parallel",
        "phi_deg": 24.0,
        "epsilon": 0.05,
        "delta": 0.0,
        "delta_units": "omega_x",  # omega_x | natural
        "rate_modulation": None,  # default: 0.4 for perp, 0 for parallel
    },
    "grid": {
        "start": -3.0,  # delta grid for scan-delta (delta_units apply)
        "stop": 3.0,
        "count": 21,
    },
    "sim": {
        "n_atoms": 1000,
        "dt": None,  # default: stability bound
        "n_periods": 150.0,  # phase-2 duration in vibrational periods
        "n_steps": None,  # overrides n_periods when set
        "t_thermalize": None,  # default: 300 / Gamma_p
        "seed": 1,
        "snapshot_stride": None,  # default: >= 12 samples per period
        "initial_temperature": 3.0,
        "recoil_kicks": True,
        "cloud_cells": 8,
    },
    "sweep": {
        "angles_deg": [16.0, 24.0, 32.0],
        # half-span of per-branch windows, in units of the mode velocity:
        # every angle is scanned over the same v_mod interval so the
        # (asymmetric) lineshape is sampled congruently across angles
        "window_vbar": 0.5,
        "points_per_branch": 9,
    },
    "scan": {
        "half_span_omega_x": 0.9,  # transmission scan window around prediction
        "count": 7,
    },
    "profile": {
        "n_periods_window": 8,  # window in expected grating periods
        "n_bins": 256,
        "drift_band": [0.7, 1.3],  # mode-locked drift selection, units of v_bar
    },
    "output": {
        "dir": "out",
        "workers": 1,
        "dump_snapshots": False,
    },
}


@dataclass
class ExperimentConfig:
    """Resolved experiment description (angles in radians, detunings natural)."""

    experiment: str
    lattice: LatticeSpec
    kind: Configuration
    phi: float
    epsilon: float
    delta: float  # natural units
    rate_modulation_perp: float
    delta_grid: np.ndarray  # natural units, for scan-delta
    angles: list  # radians, for scan-angle
    window_vbar: float
    points_per_branch: int
    scan_half_span: float  # units of Omega_x
    scan_count: int
    profile_periods: int
    profile_bins: int
    drift_band: tuple
    sim: SimConfig
    n_periods: float
    out_dir: str
    workers: int
    dump_snapshots: bool
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def omega_x(self) -> float:
        return vibrational_frequency(self.lattice)

    def modulation(self, kind: Configuration, phi: float, delta: float,
                   epsilon: Optional[float] = None) -> ModulationSpec:
        rm = self.rate_modulation_perp if kind is Configuration.PERP else 0.0
        eps = self.epsilon if epsilon is None else epsilon
        if eps == 0.0:
            rm = 0.0
        return ModulationSpec(kind=kind, phi=phi, epsilon=eps, delta=delta,
                              rate_modulation=rm)

    def sim_for(self, seed: int) -> SimConfig:
        base = self.sim
        return SimConfig(n_atoms=base.n_atoms, dt=base.dt, n_steps=base.n_steps,
                         t_thermalize=base.t_thermalize, seed=seed,
                         snapshot_stride=base.snapshot_stride,
                         initial_temperature=base.initial_temperature,
                         recoil_kicks=base.recoil_kicks,
                         cloud_cells=base.cloud_cells)


@dataclass
class RunRecord:
    """One experiment's complete, persistable outcome."""

    experiment: str
    config: dict
    seed: int
    results: dict
    theory: dict
    schema_version: str = SCHEMA_VERSION
    wall_clock_s: float = 0.0  # written to the sidecar log, not the summary


class ConfigError(ValueError):
    pass


def _validate_sections(data: dict) -> None:
    unknown = []
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    for key in data:
        if key != "experiment" and key not in _SCHEMA:
            unknown.append(key)
    for sect, keys in _SCHEMA.items():
        got = data.get(sect, {})
        if got is None:
            continue
        if not isinstance(got, dict):
            raise ConfigError(f"section {sect!r} must be a mapping")
        for k in got:
            if k not in keys:
                unknown.append(f"{sect}.{k}")
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")


def _get(data: dict, sect: str, key: str):
    v = (data.get(sect) or {}).get(key, _SCHEMA[sect][key])
    return _SCHEMA[sect][key] if v is None else v


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a raw mapping and resolve every default."""
    _validate_sections(data)
    experiment = data.get("experiment", "predict")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")

    theta = math.radians(float(_get(data, "lattice", "theta_deg")))
    u0 = float(_get(data, "lattice", "U0"))
    if not 0.0 < theta < math.pi / 2:
        raise ConfigError("lattice.theta_deg must be in (0, 90)")
    if u0 <= 0.0:
        raise ConfigError("lattice.U0 must be > 0")
    omega_x = math.sin(theta) * math.sqrt(u0)
    gamma_raw = (data.get("lattice") or {}).get("Gamma_p")
    gamma_p = omega_x if gamma_raw is None else float(gamma_raw)
    if gamma_p <= 0.0:
        raise ConfigError("lattice.Gamma_p must be > 0")
    lattice = LatticeSpec(theta=theta, U0=u0, Gamma_p=gamma_p)

    kind = Configuration(str(_get(data, "modulation", "kind")))
    phi = math.radians(float(_get(data, "modulation", "phi_deg")))
    if not 0.0 < phi < math.pi / 2:
        raise ConfigError("modulation.phi_deg must be in (0, 90)")
    epsilon = float(_get(data, "modulation", "epsilon"))
    if epsilon < 0.0:
        raise ConfigError("modulation.epsilon must be >= 0")
    delta_units = str(_get(data, "modulation", "delta_units"))
    if delta_units not in ("omega_x", "natural"):
        raise ConfigError("modulation.delta_units must be 'omega_x' or 'natural'")
    unit = omega_x if delta_units == "omega_x" else 1.0
    delta = float(_get(data, "modulation", "delta")) * unit
    rm_raw = (data.get("modulation") or {}).get("rate_modulation")
    rate_mod_perp = 0.4 if rm_raw is None else float(rm_raw)
    if not 0.0 <= rate_mod_perp <= 1.0:
        raise ConfigError("modulation.rate_modulation must be in [0, 1]")

    g0 = float(_get(data, "grid", "start"))
    g1 = float(_get(data, "grid", "stop"))
    gn = int(_get(data, "grid", "count"))
    if gn < 1 or g1 <= g0:
        raise ConfigError("grid must have count >= 1 and stop > start")
    delta_grid = np.linspace(g0, g1, gn) * unit

    n_atoms = int(_get(data, "sim", "n_atoms"))
    period = 2.0 * math.pi / omega_x
    dt_raw = (data.get("sim") or {}).get("dt")
    dt = STABILITY_BOUND / max(omega_x, gamma_p) if dt_raw is None else float(dt_raw)
    n_periods = float(_get(data, "sim", "n_periods"))
    ns_raw = (data.get("sim") or {}).get("n_steps")
    n_steps = int(round(n_periods * period / dt)) if ns_raw is None else int(ns_raw)
    tt_raw = (data.get("sim") or {}).get("t_thermalize")
    t_therm = 300.0 / gamma_p if tt_raw is None else float(tt_raw)
    st_raw = (data.get("sim") or {}).get("snapshot_stride")
    stride = max(1, int(period / (12.0 * dt))) if st_raw is None else int(st_raw)
    try:
        sim = SimConfig(n_atoms=n_atoms, dt=dt, n_steps=n_steps, t_thermalize=t_therm,
                        seed=int(_get(data, "sim", "seed")), snapshot_stride=stride,
                        initial_temperature=float(_get(data, "sim", "initial_temperature")),
                        recoil_kicks=bool(_get(data, "sim", "recoil_kicks")),
                        cloud_cells=int(_get(data, "sim", "cloud_cells")))
        sim.check_stability(lattice)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    angles = [math.radians(float(a)) for a in _get(data, "sweep", "angles_deg")]
    for a in angles:
        if not 0.0 < a < math.pi / 2:
            raise ConfigError("sweep.angles_deg entries must be in (0, 90)")

    band = _get(data, "profile", "drift_band")
    if len(band) != 2 or not band[0] < band[1]:
        raise ConfigError("profile.drift_band must be [lo, hi] with lo < hi")

    return ExperimentConfig(
        experiment=experiment, lattice=lattice, kind=kind, phi=phi,
        epsilon=epsilon, delta=delta, rate_modulation_perp=rate_mod_perp,
        delta_grid=delta_grid, angles=angles,
        window_vbar=float(_get(data, "sweep", "window_vbar")),
        points_per_branch=int(_get(data, "sweep", "points_per_branch")),
        scan_half_span=float(_get(data, "scan", "half_span_omega_x")),
        scan_count=int(_get(data, "scan", "count")),
        profile_periods=int(_get(data, "profile", "n_periods_window")),
        profile_bins=int(_get(data, "profile", "n_bins")),
        drift_band=(float(band[0]), float(band[1])),
        sim=sim, n_periods=n_periods,
        out_dir=str(_get(data, "output", "dir")),
        workers=int(_get(data, "output", "workers")),
        dump_snapshots=bool(_get(data, "output", "dump_snapshots")),
        raw=data,
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return parse_config(data)


def default_config(experiment: str = "predict", **overrides) -> ExperimentConfig:
    data = {"experiment": experiment}
    data.update(overrides)
    return parse_config(data)


def dump_config(cfg: ExperimentConfig) -> str:
    """YAML text that parses back to a semantically identical config."""
    omega_x = cfg.omega_x
    data = {
        "experiment": cfg.experiment,
        "lattice": {"theta_deg": math.degrees(cfg.lattice.theta),
                    "U0": cfg.lattice.U0, "Gamma_p": cfg.lattice.Gamma_p},
        "modulation": {"kind": cfg.kind.value, "phi_deg": math.degrees(cfg.phi),
                       "epsilon": cfg.epsilon, "delta": cfg.delta,
                       "delta_units": "natural",
                       "rate_modulation": cfg.rate_modulation_perp},
        "grid": {"start": float(cfg.delta_grid[0]),
                 "stop": float(cfg.delta_grid[-1]), "count": len(cfg.delta_grid)},
        "sim": {"n_atoms": cfg.sim.n_atoms, "dt": cfg.sim.dt,
                "n_steps": cfg.sim.n_steps, "t_thermalize": cfg.sim.t_thermalize,
                "seed": cfg.sim.seed, "snapshot_stride": cfg.sim.snapshot_stride,
                "initial_temperature": cfg.sim.initial_temperature,
                "recoil_kicks": cfg.sim.recoil_kicks, "cloud_cells": cfg.sim.cloud_cells},
        "sweep": {"angles_deg": [math.degrees(a) for a in cfg.angles],
                  "window_vbar": cfg.window_vbar,
                  "points_per_branch": cfg.points_per_branch},
        "scan": {"half_span_omega_x": cfg.scan_half_span, "count": cfg.scan_count},
        "profile": {"n_periods_window": cfg.profile_periods, "n_bins": cfg.profile_bins,
                    "drift_band": list(cfg.drift_band)},
        "output": {"dir": cfg.out_dir, "workers": cfg.workers,
                   "dump_snapshots": cfg.dump_snapshots},
    }
    del omega_x
    return yaml.safe_dump(data, sort_keys=True)


# -- point execution ---------------------------------------------------------

def _init_worker():
    # sweep points already parallelize across processes; keep each kernel
    # single-threaded to avoid oversubscription
    import numba
    numba.set_num_threads(1)


def _run_point(args) -> dict:
    """One sweep point: simulate and reduce to small numbers (runs in a
    worker process; must stay picklable and import-light)."""
    (lat, mod, sim_cfg, want_proxy) = args
    series = run(sim_cfg, lat, mod)
    v, se = cm_velocity(series)
    try:
        eq = bool(equilibration_ok(series))
    except ValueError:  # thermalization record too short (tiny test runs)
        eq = None
    out = {"v_cm": v.tolist(), "stderr": se.tolist(), "equilibrated": eq}
    if want_proxy:
        out["s_density"] = transmission_proxy(series, mod, "density")
        out["s_magnetization"] = transmission_proxy(series, mod, "magnetization")
    return out


def _map_points(cfg: ExperimentConfig, jobs: list) -> list:
    """Run point jobs, preserving order; a failed point becomes an error
    record instead of aborting the sweep."""
    results = [None] * len(jobs)
    if cfg.workers > 1:
        # spawn (not fork): the OpenMP threading layer is not fork-safe
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker,
                                 mp_context=ctx) as pool:
            futs = {pool.submit(_run_point, j): i for i, j in enumerate(jobs)}
            for fut, i in futs.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # point failure is recorded, not fatal
                    results[i] = {"error": f"{type(exc).__name__}: {exc}"}
    else:
        for i, j in enumerate(jobs):
            try:
                results[i] = _run_point(j)
            except Exception as exc:
                results[i] = {"error": f"{type(exc).__name__}: {exc}"}
    return results


def _theory_block(cfg: ExperimentConfig, phi: Optional[float] = None) -> dict:
    phi = cfg.phi if phi is None else phi
    omega_x = cfg.omega_x
    out = {"omega_x": omega_x, "v_mode": theory.mode_velocity(cfg.lattice.theta, omega_x)}
    for kind in (Configuration.PARALLEL, Configuration.PERP):
        res = theory.resonance_detunings(kind, phi, cfg.lattice.theta, omega_x)
        grat = theory.grating_wavevector(kind, phi, cfg.lattice.theta)
        out[kind.value] = {
            "delta_res": list(res.delta_res),
            "delta_res_over_omega_x": [d / omega_x for d in res.delta_res],
            "v_mod_res": list(res.v_mod_res),
            "q_magnitude": grat.q_magnitude,
            "mismatch": grat.mismatch,
            "phase_matched": grat.phase_matched,
            "residual": theory.phase_matching_residual(kind, phi, cfg.lattice.theta),
        }
    out["units_si"] = UnitSystem().summary()
    return out


def predict(cfg: ExperimentConfig) -> RunRecord:
    t0 = time.perf_counter()
    results = {"angles": {}}
    for phi in sorted(set(cfg.angles) | {cfg.phi}):
        results["angles"][f"{math.degrees(phi):.6g}"] = _theory_block(cfg, phi)
    return RunRecord(experiment="predict", config=_config_echo(cfg), seed=cfg.sim.seed,
                     results=results, theory=_theory_block(cfg),
                     wall_clock_s=time.perf_counter() - t0)


def _config_echo(cfg: ExperimentConfig) -> dict:
    return yaml.safe_load(dump_config(cfg))


def _curve_from_points(cfg, deltas, points, with_proxy) -> ResonanceCurve:
    ok = [i for i, p in enumerate(points) if "error" not in p]
    absc = np.asarray([deltas[i] for i in ok])
    v = np.asarray([points[i]["v_cm"][0] for i in ok])
    se = np.asarray([points[i]["stderr"][0] for i in ok])
    curve = ResonanceCurve(abscissa=absc, v_cm_x=v, stderr=se, meta={
        "kind": cfg.kind.value, "phi_deg": math.degrees(cfg.phi),
        "theta_deg": math.degrees(cfg.lattice.theta), "U0": cfg.lattice.U0,
        "Gamma_p": cfg.lattice.Gamma_p, "epsilon": cfg.epsilon,
        "omega_x": cfg.omega_x,
    })
    if with_proxy:
        curve.proxy = np.asarray([points[i]["s_density"] for i in ok])
        curve.proxy_mag = np.asarray([points[i]["s_magnetization"] for i in ok])
    return curve


def run_delta_sweep(cfg: ExperimentConfig, kind: Optional[Configuration] = None,
                    with_proxy: bool = False) -> RunRecord:
    """v_cm,x (and optionally the scattering proxy) over the delta grid."""
    t0 = time.perf_counter()
    kind = cfg.kind if kind is None else kind
    deltas = cfg.delta_grid
    jobs = []
    for i, d in enumerate(deltas):
        mod = cfg.modulation(kind, cfg.phi, float(d))
        jobs.append((cfg.lattice, mod, cfg.sim_for(derive_seed(cfg.sim.seed, i)), with_proxy))
    points = _map_points(cfg, jobs)
    curve = _curve_from_points(cfg, deltas, points, with_proxy)
    peaks = resonance_scan_analyze(curve)
    results = {
        "kind": kind.value,
        "deltas": deltas.tolist(),
        "points": points,
        "peaks": {
            "positive": list(peaks.positive) if peaks.positive else None,
            "negative": list(peaks.negative) if peaks.negative else None,
        },
    }
    return RunRecord(experiment="scan-delta", config=_config_echo(cfg),
                     seed=cfg.sim.seed, results=results,
                     theory=_theory_block(cfg), wall_clock_s=time.perf_counter() - t0)


def _branch_grid(pred: float, half_span: float, n: int) -> np.ndarray:
    """Symmetric two-branch grid around +-pred (strictly increasing); the
    inner edge is clipped away from zero so the branches never overlap."""
    lo = max(pred - half_span, 0.1 * pred)
    pos = np.linspace(lo, pred + half_span, n)
    return np.concatenate([-pos[::-1], pos])


def run_angle_sweep(cfg: ExperimentConfig) -> RunRecord:
    """Resonance positions vs sin(phi) for both configurations, with a
    least-squares line fit per configuration (the angle law)."""
    t0 = time.perf_counter()
    if len(cfg.angles) < 3:
        raise ConfigError("scan-angle needs >= 3 angles for a line fit")
    omega_x = cfg.omega_x
    v_bar = theory.mode_velocity(cfg.lattice.theta, omega_x)
    rows = []
    for ki, kind in enumerate((Configuration.PARALLEL, Configuration.PERP)):
        for ai, phi in enumerate(cfg.angles):
            pred = theory.resonance_detunings(kind, phi, cfg.lattice.theta,
                                              omega_x).delta_res[0]
            # congruent windows: the same v_mod span at every angle
            half = cfg.window_vbar * v_bar * 2.0 * math.sin(phi)
            deltas = _branch_grid(pred, half, cfg.points_per_branch)
            jobs = []
            for i, d in enumerate(deltas):
                mod = cfg.modulation(kind, phi, float(d))
                seed = derive_seed(cfg.sim.seed, ki, ai, i)
                jobs.append((cfg.lattice, mod, cfg.sim_for(seed), False))
            points = _map_points(cfg, jobs)
            sub = ExperimentConfig(**{**cfg.__dict__, "kind": kind, "phi": phi})
            curve = _curve_from_points(sub, deltas, points, False)
            peaks = resonance_scan_analyze(curve)
            for branch, pk in (("positive", peaks.positive), ("negative", peaks.negative)):
                rows.append({
                    "kind": kind.value, "phi_deg": math.degrees(phi),
                    "sin_phi": math.sin(phi), "branch": branch,
                    "delta_peak": pk[0] if pk else None,
                    "delta_peak_unc": pk[1] if pk else None,
                    "delta_theory": pred if branch == "positive" else -pred,
                    "detected": pk is not None,
                })
    fits = {}
    for kind in (Configuration.PARALLEL, Configuration.PERP):
        pts = [(r["sin_phi"], abs(r["delta_peak"]), r["delta_peak_unc"]) for r in rows
               if r["kind"] == kind.value and r["detected"]]
        if len(pts) >= 3:
            sx = np.array([p[0] for p in pts])
            sy = np.array([p[1] for p in pts])
            # inverse-halfwidth weighting: broad plateaus localize poorly
            w = 1.0 / np.clip(np.array([p[2] for p in pts]), 1e-6, None)
            slope, intercept = np.polyfit(sx, sy, 1, w=w)
            fits[kind.value] = {"slope": float(slope), "intercept": float(intercept),
                                "n_points": len(pts),
                                "slope_theory": 2.0 * omega_x / math.sin(cfg.lattice.theta),
                                "intercept_theory": 0.0 if kind is Configuration.PARALLEL else omega_x}
        else:
            fits[kind.value] = None
    results = {"table": rows, "fits": fits, "omega_x": omega_x}
    return RunRecord(experiment="scan-angle", config=_config_echo(cfg),
                     seed=cfg.sim.seed, results=results,
                     theory=_theory_block(cfg), wall_clock_s=time.perf_counter() - t0)


def _profile_result(cfg: ExperimentConfig, series: EnsembleSeries, kind: Configuration,
                    ) -> tuple[dict, DensityProfile, DensityProfile]:
    omega_x = cfg.omega_x
    v_bar = theory.mode_velocity(cfg.lattice.theta, omega_x)
    grat = theory.grating_wavevector(kind, cfg.phi, cfg.lattice.theta)
    window = cfg.profile_periods * 2.0 * math.pi / grat.q_magnitude
    static_q = 2.0 * cfg.lattice.kappa_perp
    full = moving_frame_density(series, v_bar, window, cfg.profile_bins, by_state=True)
    band = (cfg.drift_band[0] * v_bar, cfg.drift_band[1] * v_bar)
    selected = moving_frame_density(series, v_bar, window, cfg.profile_bins,
                                    by_state=True, drift_select=band)
    est_full = grating_wavevector_estimate(full, static_q=static_q)
    est_sel = grating_wavevector_estimate(selected, static_q=static_q)
    out = {
        "kind": kind.value,
        "frame_velocity": v_bar,
        "window": window,
        "q_theory": grat.q_magnitude,
        "q_hat": list(est_full) if est_full else None,
        "q_hat_selected": list(est_sel) if est_sel else None,
        "no_grating": est_full is None,
        "n_selected": selected.meta["n_atoms_selected"],
    }
    return out, full, selected


def run_density_profile(cfg: ExperimentConfig) -> RunRecord:
    """Moving-frame profiles at each configuration's predicted resonance."""
    t0 = time.perf_counter()
    omega_x = cfg.omega_x
    results = {"profiles": {}}
    profiles = {}
    for ki, kind in enumerate((Configuration.PARALLEL, Configuration.PERP)):
        pred = theory.resonance_detunings(kind, cfg.phi, cfg.lattice.theta,
                                          omega_x).delta_res[0]
        mod = cfg.modulation(kind, cfg.phi, pred)
        series = run(cfg.sim_for(derive_seed(cfg.sim.seed, 100 + ki)), cfg.lattice, mod)
        block, full, selected = _profile_result(cfg, series, kind)
        v, se = cm_velocity(series)
        block["v_cm_x"] = v[0]
        block["v_cm_x_stderr"] = se[0]
        block["delta"] = pred
        results["profiles"][kind.value] = block
        profiles[kind.value] = (full, selected)
        if cfg.dump_snapshots:
            profiles[f"_series_{kind.value}"] = series
    qp = results["profiles"]["parallel"].get("q_hat")
    qx = results["profiles"]["perp"].get("q_hat")
    results["q_ratio"] = (qx[0] / qp[0]) if (qp and qx) else None
    rec = RunRecord(experiment="density-profile", config=_config_echo(cfg),
                    seed=cfg.sim.seed, results=results,
                    theory=_theory_block(cfg), wall_clock_s=time.perf_counter() - t0)
    rec.results["_profiles"] = profiles  # attached for export; stripped from JSON
    return rec


def run_transmission_scan(cfg: ExperimentConfig) -> RunRecord:
    """Scattering proxy vs detuning around each configuration's predicted
    resonance, with a modulation-off twin providing the statistical floor."""
    t0 = time.perf_counter()
    omega_x = cfg.omega_x
    results = {"scans": {}}

    # one modulation-off run; floors are RMS of the proxy over the scan deltas
    floor_cfg = cfg.sim_for(derive_seed(cfg.sim.seed, 999))
    floor_series = run(floor_cfg, cfg.lattice, None)

    for ki, kind in enumerate((Configuration.PARALLEL, Configuration.PERP)):
        pred = theory.resonance_detunings(kind, cfg.phi, cfg.lattice.theta,
                                          omega_x).delta_res[0]
        span = cfg.scan_half_span * omega_x
        deltas = np.linspace(pred - span, pred + span, cfg.scan_count)
        jobs = []
        for i, d in enumerate(deltas):
            mod = cfg.modulation(kind, cfg.phi, float(d))
            jobs.append((cfg.lattice, mod, cfg.sim_for(derive_seed(cfg.sim.seed, ki, i)), True))
        points = _map_points(cfg, jobs)
        ref_mod = cfg.modulation(kind, cfg.phi, pred)
        # floor = RMS of the null-run proxy over many probe frequencies in
        # the window (a single evaluation of |noise| is itself ~50% noisy)
        probe = np.linspace(pred - span, pred + span, 25)
        floors = {}
        for weighting in ("density", "magnetization"):
            vals = [transmission_proxy(floor_series, ref_mod, weighting, delta=float(d))
                    for d in probe]
            floors[weighting] = float(np.sqrt(np.mean(np.square(vals))))
        s_dens = [p.get("s_density") for p in points]
        ok = [v for v in s_dens if v is not None]
        results["scans"][kind.value] = {
            "delta_theory": pred,
            "deltas": deltas.tolist(),
            "points": points,
            "floor_density": floors["density"],
            "floor_magnetization": floors["magnetization"],
            "peak_delta": float(deltas[int(np.argmax(ok))]) if ok else None,
            "s_at_prediction": (points[cfg.scan_count // 2].get("s_density")
                                if "error" not in points[cfg.scan_count // 2] else None),
            "scan_step": float(deltas[1] - deltas[0]),
        }
    return RunRecord(experiment="transmission-scan", config=_config_echo(cfg),
                     seed=cfg.sim.seed, results=results,
                     theory=_theory_block(cfg), wall_clock_s=time.perf_counter() - t0)


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    if cfg.experiment == "predict":
        return predict(cfg)
    if cfg.experiment == "scan-delta":
        return run_delta_sweep(cfg)
    if cfg.experiment == "scan-angle":
        return run_angle_sweep(cfg)
    if cfg.experiment == "density-profile":
        return run_density_profile(cfg)
    if cfg.experiment == "transmission-scan":
        return run_transmission_scan(cfg)
    raise ConfigError(f"unknown experiment {cfg.experiment!r}")


# -- persistence --------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def _write_curve_csv(path: Path, rec: RunRecord) -> None:
    res = rec.results
    omega_x = rec.theory["omega_x"]
    has_proxy = any("s_density" in p for p in res["points"])
    cols = ["delta", "delta_over_omega_x", "v_mod", "v_cm_x", "v_cm_x_stderr"]
    if has_proxy:
        cols += ["s_density", "s_magnetization"]
    lines = [",".join(cols)]
    phi = math.radians(rec.config["modulation"]["phi_deg"])
    for d, p in zip(res["deltas"], res["points"]):
        if "error" in p:
            continue
        row = [_fmt(d), _fmt(d / omega_x), _fmt(theory.modulation_velocity(d, phi)),
               _fmt(p["v_cm"][0]), _fmt(p["stderr"][0])]
        if has_proxy:
            row += [_fmt(p["s_density"]), _fmt(p["s_magnetization"])]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _write_angle_csv(path: Path, rec: RunRecord) -> None:
    cols = ["kind", "phi_deg", "sin_phi", "branch", "delta_peak", "delta_peak_unc",
            "delta_theory", "detected"]
    lines = [",".join(cols)]
    for r in rec.results["table"]:
        lines.append(",".join([
            r["kind"], _fmt(r["phi_deg"]), _fmt(r["sin_phi"]), r["branch"],
            _fmt(r["delta_peak"]) if r["detected"] else "",
            _fmt(r["delta_peak_unc"]) if r["detected"] else "",
            _fmt(r["delta_theory"]), "1" if r["detected"] else "0",
        ]))
    path.write_text("\n".join(lines) + "\n")


def _write_profile_csv(path: Path, prof: DensityProfile) -> None:
    lines = ["x,density,density_plus,density_minus"]
    plus = prof.by_state[0] if prof.by_state is not None else np.zeros_like(prof.density)
    minus = prof.by_state[1] if prof.by_state is not None else np.zeros_like(prof.density)
    for x, d, dp, dm in zip(prof.bin_centers, prof.density, plus, minus):
        lines.append(",".join([_fmt(x), _fmt(d), _fmt(dp), _fmt(dm)]))
    path.write_text("\n".join(lines) + "\n")


def _write_snapshots_csv(path: Path, series: EnsembleSeries) -> None:
    with open(path, "w") as fh:
        fh.write("t,atom_id,x,y,z,px,py,pz,s\n")
        for it, t in enumerate(series.times):
            r = series.r[it]
            p = series.p[it]
            s = series.s[it]
            for j in range(series.n_atoms):
                fh.write(f"{_fmt(t)},{j},{_fmt(r[j, 0])},{_fmt(r[j, 1])},{_fmt(r[j, 2])},"
                         f"{_fmt(p[j, 0])},{_fmt(p[j, 1])},{_fmt(p[j, 2])},{int(s[j])}\n")


def export(rec: RunRecord, out_dir) -> list:
    """Write the summary JSON, per-experiment CSVs, and the sidecar log.

    The summary bytes are a pure function of the record's config (wall
    clock and other volatile data go to run.log only).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    results = dict(rec.results)
    profiles = results.pop("_profiles", None)

    summary = {
        "schema_version": rec.schema_version,
        "experiment": rec.experiment,
        "package_version": __version__,
        "config": rec.config,
        "seed": rec.seed,
        "theory": rec.theory,
        "results": results,
    }
    files = {}
    if rec.experiment == "scan-delta":
        name = f"scan_{results['kind']}.csv"
        _write_curve_csv(out / name, rec)
        files["curve_csv"] = name
        written.append(out / name)
    elif rec.experiment == "scan-angle":
        _write_angle_csv(out / "angle_table.csv", rec)
        files["angle_csv"] = "angle_table.csv"
        written.append(out / "angle_table.csv")
    elif rec.experiment == "density-profile" and profiles is not None:
        for kind in ("parallel", "perp"):
            full, selected = profiles[kind]
            for tag, prof in (("", full), ("_selected", selected)):
                name = f"profile_{kind}{tag}.csv"
                _write_profile_csv(out / name, prof)
                files[f"profile_{kind}{tag}"] = name
                written.append(out / name)
            series = profiles.get(f"_series_{kind}")
            if series is not None:
                name = f"snapshots_{kind}.csv"
                _write_snapshots_csv(out / name, series)
                files[f"snapshots_{kind}"] = name
                written.append(out / name)
    elif rec.experiment == "transmission-scan":
        for kind in ("parallel", "perp"):
            sc = results["scans"][kind]
            name = f"transmission_{kind}.csv"
            cols = ["delta", "v_cm_x", "v_cm_x_stderr", "s_density", "s_magnetization"]
            lines = [",".join(cols)]
            for d, p in zip(sc["deltas"], sc["points"]):
                if "error" in p:
                    continue
                lines.append(",".join([_fmt(d), _fmt(p["v_cm"][0]), _fmt(p["stderr"][0]),
                                       _fmt(p["s_density"]), _fmt(p["s_magnetization"])]))
            (out / name).write_text("\n".join(lines) + "\n")
            files[f"scan_{kind}"] = name
            written.append(out / name)
    summary["files"] = files

    spath = out / f"{rec.experiment.replace('-', '_')}_summary.json"
    spath.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    written.append(spath)

    with open(out / "run.log", "a") as fh:
        fh.write(f"{rec.experiment}: wall_clock_s={rec.wall_clock_s:.3f}\n")
    return written


def read_summary(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def read_csv(path) -> dict:
    """Columns of a harness CSV as float arrays (full precision)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = {}
    for i, name in enumerate(header):
        vals = [r[i] for r in rows]
        try:
            cols[name] = np.array([float(v) if v != "" else np.nan for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return cols
