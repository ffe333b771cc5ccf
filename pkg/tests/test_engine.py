import math

import numpy as np
import pytest
from numba import njit
from scipy import stats

from latticemc.engine import INIT_DRAWS, Ensemble, EnsembleSeries, SimConfig, initialize, run, step
from latticemc.model import Configuration, LatticeSpec, ModulationSpec, force, potential
from latticemc.observables import equilibration_ok, grating_wavevector_estimate, moving_frame_density
from latticemc.rng import AtomStreams, rng_stream
from latticemc import _kernels

THETA = math.radians(30.0)


def make_lat(U0=100.0, Gamma_p=1.0):
    return LatticeSpec(theta=THETA, U0=U0, Gamma_p=Gamma_p)


def cfg_for(lat, n_atoms=100, n_periods=10.0, t_therm=0.0, seed=1, samples_per_period=12,
            **kw):
    omega = lat.kappa_perp * math.sqrt(lat.U0)
    dt = 0.05 / max(omega, lat.Gamma_p)
    period = 2 * math.pi / omega
    stride = max(1, int(period / (samples_per_period * dt)))
    return SimConfig(n_atoms=n_atoms, dt=dt, n_steps=int(round(n_periods * period / dt)),
                     t_thermalize=t_therm, seed=seed, snapshot_stride=stride, **kw)


# -- config validation --------------------------------------------------------

def test_simconfig_validation():
    with pytest.raises(ValueError):
        SimConfig(n_atoms=0, dt=0.01, n_steps=1, t_thermalize=0, seed=1)
    with pytest.raises(ValueError):
        SimConfig(n_atoms=1, dt=-0.01, n_steps=1, t_thermalize=0, seed=1)
    with pytest.raises(ValueError):
        SimConfig(n_atoms=1, dt=0.01, n_steps=1, t_thermalize=0, seed=1, snapshot_stride=0)


def test_stability_bound_enforced():
    lat = make_lat(U0=400.0)  # Omega_x = 10
    cfg = SimConfig(n_atoms=2, dt=0.0051, n_steps=1, t_thermalize=0, seed=1)
    with pytest.raises(ValueError):
        cfg.check_stability(lat)
    with pytest.raises(ValueError):
        run(cfg, lat, None)
    SimConfig(n_atoms=2, dt=0.005, n_steps=1, t_thermalize=0, seed=1).check_stability(lat)


# -- kernel building blocks ---------------------------------------------------

def test_kernel_sincos_accuracy():
    @njit
    def sc(xs, out_s, out_c):
        for i in range(xs.shape[0]):
            s, c = _kernels._sincos(xs[i])
            out_s[i] = s
            out_c[i] = c

    xs = np.random.default_rng(0).uniform(-2e4, 2e4, 300_000)
    os_, oc = np.empty_like(xs), np.empty_like(xs)
    sc(xs, os_, oc)
    assert np.abs(os_ - np.sin(xs)).max() < 5e-16
    assert np.abs(oc - np.cos(xs)).max() < 5e-16
    # exact at zero (a site of pure matching polarization stays dark)
    z = np.array([0.0])
    sc(z, os_[:1], oc[:1])
    assert os_[0] == 0.0 and oc[0] == 1.0


def test_kernel_uniform_matches_rng_stream():
    @njit
    def u(key, ctr):
        return _kernels._uniform(key, ctr)

    from latticemc.rng import stream_keys
    for seed, atom, ctr in [(1, 0, 0), (12345, 7, 999), (2**40, 3, 2**20)]:
        key = np.uint64(stream_keys(seed, atom))
        assert u(key, np.uint64(ctr)) == rng_stream(seed, atom, ctr)


# -- initialization -----------------------------------------------------------

def test_initialize_zero_temperature():
    lat = make_lat()
    cfg = SimConfig(n_atoms=50, dt=0.005, n_steps=0, t_thermalize=0, seed=3,
                    initial_temperature=0.0)
    ens, _ = initialize(cfg, lat)
    assert np.all(ens.p == 0.0)


def test_initialize_deterministic():
    lat = make_lat()
    cfg = SimConfig(n_atoms=200, dt=0.005, n_steps=0, t_thermalize=0, seed=4)
    a, sa = initialize(cfg, lat)
    b, sb = initialize(cfg, lat)
    assert np.array_equal(a.r, b.r) and np.array_equal(a.p, b.p) and np.array_equal(a.s, b.s)
    assert np.all(sa.counters == INIT_DRAWS)
    assert np.array_equal(sa.keys, sb.keys)


def test_initialize_mostly_trapped():
    lat = make_lat(U0=100.0)
    cfg = SimConfig(n_atoms=4000, dt=0.005, n_steps=0, t_thermalize=0, seed=5)
    ens, _ = initialize(cfg, lat)
    # mean sublevel-resolved potential energy is negative
    assert potential(lat, ens.r, ens.s).mean() < 0.0
    # ~90% of atoms start on the locally lower-energy sublevel
    low = np.where(potential(lat, ens.r, 1.0) <= potential(lat, ens.r, -1.0), 1.0, -1.0)
    frac = (ens.s == low).mean()
    assert 0.85 < frac < 0.95


def test_initialize_cloud_extent():
    lat = make_lat()
    cfg = SimConfig(n_atoms=2000, dt=0.005, n_steps=0, t_thermalize=0, seed=6, cloud_cells=4)
    ens, _ = initialize(cfg, lat)
    assert np.abs(ens.r[:, 0]).max() <= 3.0 * lat.lambda_x
    assert np.abs(ens.r[:, 2]).max() <= 3.0 * lat.lambda_z


# -- stepping -----------------------------------------------------------------

def test_step_matches_velocity_verlet_reference():
    """The fused kernel must agree with a velocity-Verlet step built from
    model.force (jumps suppressed)."""
    lat = make_lat(U0=150.0, Gamma_p=2.0)
    for mod in (None,
                ModulationSpec(Configuration.PARALLEL, math.radians(24), 0.3, 4.0),
                ModulationSpec(Configuration.PERP, math.radians(24), 0.3, 4.0, rate_modulation=0.5)):
        cfg = SimConfig(n_atoms=64, dt=0.004, n_steps=0, t_thermalize=0, seed=7)
        ens, streams = initialize(cfg, lat)
        t, dt = 0.37, 0.004
        out, _ = step(ens, lat, mod, t, dt, streams, rate_override=0.0)
        # reference step in plain numpy
        f0 = force(lat, mod, ens.r, t, ens.s)
        p_half = ens.p + 0.5 * dt * f0
        r_new = ens.r + 2.0 * dt * p_half
        p_new = p_half + 0.5 * dt * force(lat, mod, r_new, t + dt, ens.s)
        np.testing.assert_allclose(out.r, r_new, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(out.p, p_new, rtol=1e-11, atol=1e-12)
        np.testing.assert_array_equal(out.s, ens.s)


def test_step_is_pure():
    lat = make_lat()
    cfg = SimConfig(n_atoms=16, dt=0.005, n_steps=0, t_thermalize=0, seed=8)
    ens, streams = initialize(cfg, lat)
    r0 = ens.r.copy()
    c0 = streams.counters.copy()
    step(ens, lat, None, 0.0, 0.005, streams)
    assert np.array_equal(ens.r, r0)
    assert np.array_equal(streams.counters, c0)


def test_ballistic_free_flight():
    # U0 -> 0, jumps off: r(t) = r(0) + 2 p t (M = 1/2)
    lat = LatticeSpec(theta=THETA, U0=1e-12, Gamma_p=1e-12)
    cfg = SimConfig(n_atoms=32, dt=0.01, n_steps=1000, t_thermalize=0.0, seed=9,
                    snapshot_stride=1000)
    series = run(cfg, lat, None, rate_override=0.0)
    t = series.times[-1]
    expect = series.r[0] + 2.0 * series.p[0] * t
    np.testing.assert_allclose(series.r[-1], expect, rtol=1e-12, atol=1e-10)
    np.testing.assert_allclose(series.p[-1], series.p[0], rtol=0, atol=1e-10)


def test_dark_atom_never_jumps():
    # an atom at rest at its own sigma+ site: zero force, zero pump rate
    lat = make_lat(U0=100.0, Gamma_p=5.0)
    ens = Ensemble(r=np.zeros((1, 3)), p=np.zeros((1, 3)), s=np.ones(1))
    streams = AtomStreams(11, 1)
    streams.skip_to(INIT_DRAWS)
    cur = ens
    for k in range(200):
        cur, streams = step(cur, lat, None, k * 0.005, 0.005, streams)
    assert np.array_equal(cur.r, ens.r)
    assert np.array_equal(cur.s, ens.s)


def test_energy_conservation_symplectic():
    # jumps off, no modulation: per-atom energy drift < 1e-4 over 1e5 steps,
    # measured relative to the energy above the global well bottom (the
    # dynamic scale; atoms near the separatrix have |E| ~ 0)
    lat = make_lat(U0=100.0)
    cfg = SimConfig(n_atoms=64, dt=0.002, n_steps=100_000, t_thermalize=0.0,
                    seed=10, snapshot_stride=1000, initial_temperature=2.0)
    series = run(cfg, lat, None, rate_override=0.0)
    ke = np.sum(series.p**2, axis=2)  # KE = |p|^2 for M = 1/2
    pe = potential(lat, series.r, series.s.astype(float))
    energy = ke + pe
    scale = energy[0] + lat.U0 / 2.0
    drift = np.abs(energy - energy[0]).max(axis=0) / scale
    assert drift.max() < 1e-4


def test_jump_statistics_poisson():
    # uniform artificial rate: flip counts over K steps are Binomial(K, r*dt)
    # ~ Poisson; chi^2 GOF at the 1% level with >= 1e4 events
    lat = LatticeSpec(theta=THETA, U0=1e-12, Gamma_p=1e-12)
    rate = 0.5
    dt = 0.02
    ksteps = 800
    n = 2500  # mean 8 events/atom -> 2e4 events
    cfg = SimConfig(n_atoms=n, dt=dt, n_steps=ksteps, t_thermalize=0.0, seed=12,
                    snapshot_stride=ksteps, recoil_kicks=False, initial_temperature=0.0)
    series = run(cfg, lat, None, rate_override=rate)
    flips = (series.s[0] != series.s[-1])  # parity only; need full counts instead
    # count via the consumed draw counters: 1 draw per step, +0 per jump
    # (recoil off), so use the sublevel *trajectory*: rerun with snapshots
    cfg2 = SimConfig(n_atoms=n, dt=dt, n_steps=ksteps, t_thermalize=0.0, seed=12,
                     snapshot_stride=1, recoil_kicks=False, initial_temperature=0.0)
    series2 = run(cfg2, lat, None, rate_override=rate)
    counts = (np.diff(series2.s.astype(np.int8), axis=0) != 0).sum(axis=0)
    total = int(counts.sum())
    assert total >= 10_000
    lam = rate * dt * ksteps
    # pool bins so every expected count is >= 5
    kmax = int(stats.poisson.ppf(0.999, lam))
    edges = list(range(kmax + 1))
    expected = np.array([stats.poisson.pmf(k, lam) for k in edges])
    expected[-1] = 1.0 - stats.poisson.cdf(kmax - 1, lam)
    observed = np.array([(counts == k).sum() for k in edges[:-1]] + [(counts >= kmax).sum()],
                        dtype=float)
    exp = expected * n
    keep = exp >= 5
    chi2 = ((observed[keep] - exp[keep])**2 / exp[keep]).sum()
    dof = keep.sum() - 1
    p = 1.0 - stats.chi2.cdf(chi2, dof)
    assert p > 0.01, f"chi2={chi2:.1f} dof={dof} p={p:.4f}"
    del flips, series


def test_recoil_heating_rate():
    # forces off, fixed rate, recoil on: <p^2> grows at 2*rate (two unit
    # kicks per event), within 5%
    lat = LatticeSpec(theta=THETA, U0=1e-12, Gamma_p=1e-12)
    rate = 0.4
    dt = 0.02
    cfg = SimConfig(n_atoms=8000, dt=dt, n_steps=2000, t_thermalize=0.0, seed=13,
                    snapshot_stride=50, recoil_kicks=True, initial_temperature=0.0)
    series = run(cfg, lat, None, rate_override=rate)
    p2 = np.sum(series.p**2, axis=(1, 2)) / series.n_atoms
    slope = np.polyfit(series.times, p2, 1)[0]
    assert slope == pytest.approx(2.0 * rate, rel=0.05)


def test_run_determinism_and_thread_invariance():
    import numba

    lat = make_lat(U0=200.0, Gamma_p=7.0)
    mod = ModulationSpec(Configuration.PERP, math.radians(24), 0.05, 11.0, rate_modulation=0.4)
    cfg = cfg_for(lat, n_atoms=300, n_periods=5.0, t_therm=2.0, seed=14)
    a = run(cfg, lat, mod)
    b = run(cfg, lat, mod)
    assert np.array_equal(a.r, b.r) and np.array_equal(a.p, b.p) and np.array_equal(a.s, b.s)
    assert np.array_equal(a.times, b.times)
    assert a.metadata["provenance"] == b.metadata["provenance"]
    old = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        c = run(cfg, lat, mod)
    finally:
        numba.set_num_threads(old)
    assert np.array_equal(a.r, c.r) and np.array_equal(a.p, c.p) and np.array_equal(a.s, c.s)


def test_series_structure():
    lat = make_lat()
    cfg = SimConfig(n_atoms=17, dt=0.005, n_steps=100, t_thermalize=0.1, seed=15,
                    snapshot_stride=10)
    series = run(cfg, lat, None)
    assert series.n_snapshots == 11
    assert series.times[0] == 0.0
    spacing = np.diff(series.times)
    np.testing.assert_allclose(spacing, 10 * 0.005, rtol=1e-12)
    assert series.r.shape == (11, 17, 3)
    assert set(np.unique(series.s)) <= {-1, 1}
    assert series.metadata["config"]["sim"]["seed"] == 15


def test_equilibration_check():
    lat = make_lat(U0=200.0, Gamma_p=7.0)
    cfg = cfg_for(lat, n_atoms=400, n_periods=2.0, t_therm=300.0 / 7.0, seed=16)
    series = run(cfg, lat, None)
    assert equilibration_ok(series)


def test_stationary_density_period():
    # unmodulated lattice: the x-density has period pi/kappa_perp, i.e. an
    # FFT peak at 2*kappa_perp (no static-harmonic masking here)
    lat = make_lat(U0=200.0, Gamma_p=7.0)
    cfg = cfg_for(lat, n_atoms=1000, n_periods=30.0, t_therm=300.0 / 7.0, seed=17)
    series = run(cfg, lat, None)
    window = 8 * math.pi / lat.kappa_perp  # 8 well periods
    prof = moving_frame_density(series, 0.0, window, 256)
    est = grating_wavevector_estimate(prof, static_q=None)
    assert est is not None
    q, dq = est
    assert q == pytest.approx(2 * lat.kappa_perp, abs=dq)
