import math

import numpy as np
import pytest

from latticemc.model import Configuration
from latticemc.theory import (GratingPrediction, ResonancePrediction,
                              grating_wavevector, mode_velocity,
                              modulation_velocity, phase_matching_residual,
                              resonance_detunings)
from latticemc.units import UnitSystem

TH30 = math.radians(30.0)
PHI24 = math.radians(24.0)


def test_mode_velocity_natural():
    assert mode_velocity(TH30, 5.0) == pytest.approx(10.0, abs=1e-12)


def test_mode_velocity_si():
    # lambda = 780 nm, Omega_x = 2*pi*50 kHz, theta = 30 deg -> 7.8 cm/s
    us = UnitSystem()
    omega_nat = us.frequency_from_si_rad_s(2 * math.pi * 50e3)
    v_si = us.velocity_to_si(mode_velocity(TH30, omega_nat))
    assert v_si == pytest.approx(0.078, rel=1e-3)


def test_mode_velocity_at_90_limit():
    # theta -> 90 deg: v = Omega_x (the lambda*Omega/(2*pi) minimum, lambda = 2*pi)
    v = mode_velocity(math.radians(89.9999), 3.0)
    assert v == pytest.approx(3.0, rel=1e-6)


def test_mode_velocity_domain():
    with pytest.raises(ValueError):
        mode_velocity(0.0, 1.0)
    with pytest.raises(ValueError):
        mode_velocity(math.pi / 2, 1.0)
    with pytest.raises(ValueError):
        mode_velocity(TH30, -1.0)


def test_modulation_velocity():
    assert modulation_velocity(0.0, PHI24) == 0.0
    assert modulation_velocity(8.135, PHI24) == pytest.approx(10.0, abs=1e-3)
    for d in (0.5, 2.0, 11.0):
        assert modulation_velocity(-d, PHI24) == -modulation_velocity(d, PHI24)
    with pytest.raises(ValueError):
        modulation_velocity(1.0, 0.0)


def test_resonance_detunings_values():
    par = resonance_detunings(Configuration.PARALLEL, PHI24, TH30, 1.0)
    perp = resonance_detunings(Configuration.PERP, PHI24, TH30, 1.0)
    ratio = 2 * math.sin(PHI24) / math.sin(TH30)
    assert par.delta_res[0] == pytest.approx(ratio, abs=1e-12)
    assert par.delta_res[0] == pytest.approx(1.6270, abs=1e-4)
    assert perp.delta_res[0] == pytest.approx(1.0 + ratio, abs=1e-12)
    assert perp.delta_res[0] == pytest.approx(2.6270, abs=1e-4)
    assert par.delta_res[1] == -par.delta_res[0]
    assert perp.delta_res[1] == -perp.delta_res[0]


def test_perp_minus_parallel_is_omega_x():
    rng = np.random.default_rng(0)
    for _ in range(50):
        phi = rng.uniform(0.05, 1.5)
        th = rng.uniform(0.05, 1.5)
        ox = rng.uniform(0.1, 20.0)
        par = resonance_detunings(Configuration.PARALLEL, phi, th, ox)
        perp = resonance_detunings(Configuration.PERP, phi, th, ox)
        assert perp.delta_res[0] - par.delta_res[0] == pytest.approx(ox, rel=1e-12)


def test_velocity_detuning_consistency():
    # modulation_velocity(delta_res) equals v_mod_res to 1e-12, both kinds,
    # 100 random angle pairs
    rng = np.random.default_rng(1)
    for _ in range(100):
        phi = rng.uniform(0.05, 1.5)
        th = rng.uniform(0.05, 1.5)
        ox = rng.uniform(0.1, 20.0)
        for kind in (Configuration.PARALLEL, Configuration.PERP):
            pred = resonance_detunings(kind, phi, th, ox)
            for d, v in zip(pred.delta_res, pred.v_mod_res):
                assert modulation_velocity(d, phi) == pytest.approx(v, rel=1e-12)
            ratio = pred.v_mod_res[0] / pred.v_mode
            expect = 1.0 if kind is Configuration.PARALLEL else 1.0 + math.sin(th) / (2 * math.sin(phi))
            assert ratio == pytest.approx(expect, rel=1e-12)


def test_dispersion_closure():
    # Omega = v_bar * |q| with Omega = |delta_res| -- exact to 1e-12
    rng = np.random.default_rng(2)
    for _ in range(100):
        phi = rng.uniform(0.05, 1.5)
        th = rng.uniform(0.05, 1.5)
        ox = rng.uniform(0.1, 20.0)
        v_bar = mode_velocity(th, ox)
        for kind in (Configuration.PARALLEL, Configuration.PERP):
            d = resonance_detunings(kind, phi, th, ox).delta_res[0]
            q = grating_wavevector(kind, phi, th).q_magnitude
            assert d == pytest.approx(v_bar * q, rel=1e-12)


def test_grating_wavevector_values():
    par = grating_wavevector(Configuration.PARALLEL, PHI24, TH30)
    perp = grating_wavevector(Configuration.PERP, PHI24, TH30)
    assert par.q_magnitude == pytest.approx(2 * math.sin(PHI24), abs=1e-14)
    assert par.q_magnitude == pytest.approx(0.81347, abs=1e-4)
    assert par.phase_matched and par.mismatch == 0.0
    assert perp.q_magnitude == pytest.approx(1.31347, abs=1e-4)
    assert perp.q_magnitude / par.q_magnitude == pytest.approx(1.6146, abs=1e-3)
    assert not perp.phase_matched


def test_perp_mismatch_is_sin_theta():
    rng = np.random.default_rng(3)
    for _ in range(50):
        phi = rng.uniform(0.05, 1.5)
        th = rng.uniform(0.05, 1.5)
        g = grating_wavevector(Configuration.PERP, phi, th)
        assert g.mismatch == pytest.approx(math.sin(th), rel=1e-12)


def test_phase_matching_residual():
    rng = np.random.default_rng(4)
    for _ in range(30):
        phi = rng.uniform(0.05, 1.5)
        th = rng.uniform(0.05, 1.5)
        assert phase_matching_residual(Configuration.PARALLEL, phi, th) == 0.0
        assert phase_matching_residual(Configuration.PERP, phi, th) > 0.0
    assert phase_matching_residual(Configuration.PERP, PHI24, TH30) == pytest.approx(0.5, abs=1e-12)


def test_prediction_types():
    p = resonance_detunings("parallel", PHI24, TH30, 2.0)
    assert isinstance(p, ResonancePrediction)
    g = grating_wavevector("perp", PHI24, TH30)
    assert isinstance(g, GratingPrediction)


def test_unit_system_recoil():
    us = UnitSystem()
    # Rb-85 at 780 nm: omega_r ~ 2*pi*3.86 kHz
    assert us.omega_r / (2 * math.pi) == pytest.approx(3861.0, rel=2e-3)
