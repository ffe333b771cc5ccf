"""Walk through the lattice geometry: the sigma+/sigma- bipotential along x,
the pumping-rate landscape, and the moving modulation for both pump-probe
configurations.

Run:  python demos/demo_potentials.py   (figures land in demos/output/)
"""
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from latticemc import Configuration, LatticeSpec, ModulationSpec
from latticemc.model import modulation_potential, potential, pump_rate

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

lat = LatticeSpec(theta=math.radians(30), U0=200.0, Gamma_p=7.07)

# the two optical potentials along the x axis (y = z = 0): alternating
# sigma+/sigma- wells spaced by half the lattice constant
x = np.linspace(-1.2 * lat.lambda_x, 1.2 * lat.lambda_x, 800)
r = np.zeros((len(x), 3))
r[:, 0] = x

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
for s, label, color in ((1, "m = +1/2", "tab:blue"), (-1, "m = -1/2", "tab:red")):
    ax1.plot(x / lat.lambda_x, potential(lat, r, s), color=color, label=label)
    ax2.plot(x / lat.lambda_x, pump_rate(lat, r, s), color=color, label=label)
ax1.set_ylabel("U_s(x)  [E_r]")
ax1.legend()
ax1.set_title("bipotential along x (wells alternate helicity every half constant)")
ax2.set_ylabel("pump rate s -> -s  [omega_r]")
ax2.set_xlabel("x / lambda_x")
fig.tight_layout()
fig.savefig(OUT / "bipotential.png", dpi=130)
print(f"wrote {OUT / 'bipotential.png'}")

# the moving modulation: in-phase (parallel) vs phase-opposed (perp)
fig, axes = plt.subplots(1, 2, figsize=(9, 3.2), sharey=True)
for ax, kind in zip(axes, (Configuration.PARALLEL, Configuration.PERP)):
    mod = ModulationSpec(kind, math.radians(24), 0.25, delta=0.0)
    for s, color in ((1, "tab:blue"), (-1, "tab:red")):
        ax.plot(x / lat.lambda_x, modulation_potential(lat, mod, r, 0.0, s),
                color=color, label=f"m = {'+' if s > 0 else '-'}1/2")
    ax.set_title(f"{kind.value} modulation at t = 0")
    ax.set_xlabel("x / lambda_x")
axes[0].set_ylabel("dU_s  [E_r]")
axes[0].legend()
fig.tight_layout()
fig.savefig(OUT / "modulation.png", dpi=130)
print(f"wrote {OUT / 'modulation.png'}")
