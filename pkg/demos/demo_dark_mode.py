"""The dark-mode story in one script: at each configuration's resonance,
(1) the cloud is dragged (the mode is excited in both), (2) the moving-frame
density shows the parallel grating at exactly the pattern wavenumber,
(3) the phase-matched scattering proxy is bright for parallel and stays
near the noise floor for perp in the density channel -- excited yet
invisible to phase-matched scattering.

Run:  python demos/demo_dark_mode.py   (about two minutes)
"""
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from latticemc import theory
from latticemc.engine import run
from latticemc.harness import parse_config
from latticemc.model import Configuration
from latticemc.observables import (cm_velocity, moving_frame_density,
                                   transmission_proxy)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

cfg = parse_config({"experiment": "predict",
                    "sim": {"n_atoms": 800, "n_periods": 120.0, "seed": 5}})
theta = cfg.lattice.theta
omega_x = cfg.omega_x
v_bar = theory.mode_velocity(theta, omega_x)

fig, axes = plt.subplots(2, 1, figsize=(7, 6))
proxies = {}
for ax, kind in zip(axes, (Configuration.PARALLEL, Configuration.PERP)):
    pred = theory.resonance_detunings(kind, cfg.phi, theta, omega_x).delta_res[0]
    grat = theory.grating_wavevector(kind, cfg.phi, theta)
    mod = cfg.modulation(kind, cfg.phi, pred)
    series = run(cfg.sim_for(5), cfg.lattice, mod)

    v, se = cm_velocity(series)
    s_dens = transmission_proxy(series, mod, "density")
    proxies[kind.value] = s_dens
    null = run(cfg.sim_for(6), cfg.lattice, None)
    probe = pred + omega_x * np.linspace(-0.8, 0.8, 25)
    floor = math.sqrt(np.mean([transmission_proxy(null, mod, "density", delta=float(d)) ** 2
                               for d in probe]))
    print(f"{kind.value:8s}: v_cm = {v[0]:+.2f} +- {se[0]:.2f} (mode dragged), "
          f"matched density wave S = {s_dens:.2e} ({s_dens / floor:.1f}x the null floor)")

    window = 8 * 2 * math.pi / grat.q_magnitude
    prof = moving_frame_density(series, v_bar, window, 256)
    ax.plot(prof.bin_centers, prof.density, lw=0.9)
    ax.set_title(f"{kind.value}: moving-frame density "
                 f"(expected grating period {2 * math.pi / grat.q_magnitude:.2f})")
    ax.set_ylabel("atoms / bin")
axes[1].set_xlabel("x - v_bar t  (mod window)  [1/k]")
contrast = proxies["parallel"] / proxies["perp"]
print(f"bright/dark contrast: the perp wave at the pattern's (dk, delta) is "
      f"{contrast:.1f}x weaker than parallel at matched drive -- the mode moves "
      f"the cloud either way, but only the parallel grating is phase matched")
fig.tight_layout()
fig.savefig(OUT / "dark_mode.png", dpi=130)
print(f"wrote {OUT / 'dark_mode.png'}")
