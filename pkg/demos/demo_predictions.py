"""The closed-form layer: mode velocity, resonant detunings, grating
wavevectors, and the phase-matching verdict for both pump-probe
configurations, in natural units and SI (Rb-85 at 780 nm).

Run:  python demos/demo_predictions.py
"""
import math

from latticemc import (Configuration, UnitSystem, grating_wavevector,
                       mode_velocity, modulation_velocity, resonance_detunings)

theta = math.radians(30.0)
omega_x = math.sin(theta) * math.sqrt(200.0)  # U0 = 200 E_r
us = UnitSystem()

print(f"Omega_x = {omega_x:.3f} omega_r = 2*pi * {us.frequency_to_si_hz(omega_x) / 1e3:.1f} kHz")
v_bar = mode_velocity(theta, omega_x)
print(f"mode velocity v_bar = {v_bar:.3f} (omega_r/k) = {100 * us.velocity_to_si(v_bar):.2f} cm/s\n")

for phi_deg in (16.0, 24.0, 32.0):
    phi = math.radians(phi_deg)
    print(f"phi = {phi_deg:g} deg  (pattern wavenumber {2 * math.sin(phi):.4f} k)")
    for kind in (Configuration.PARALLEL, Configuration.PERP):
        res = resonance_detunings(kind, phi, theta, omega_x)
        grat = grating_wavevector(kind, phi, theta)
        v = modulation_velocity(res.delta_res[0], phi)
        tag = "bright (phase matched)" if grat.phase_matched else \
            f"dark (mismatch {grat.mismatch:.4f} k)"
        print(f"  {kind.value:8s}: delta_res = +-{res.delta_res[0] / omega_x:.3f} Omega_x"
              f" = +-2*pi*{us.frequency_to_si_hz(res.delta_res[0]) / 1e3:.1f} kHz,"
              f" v_mod = {v / v_bar:.3f} v_bar, |q| = {grat.q_magnitude:.4f} k -> {tag}")
    print()
