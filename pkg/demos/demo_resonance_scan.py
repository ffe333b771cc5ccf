"""Excite the propagation mode: sweep the pump-probe detuning for both
configurations and watch the center-of-mass velocity resonate at the
predicted positions (the Fig.-3a style measurement, at reduced scale so it
finishes in about a minute).

Run:  python demos/demo_resonance_scan.py
"""
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from latticemc.harness import parse_config, run_delta_sweep
from latticemc.model import Configuration

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

OMEGA_X = math.sin(math.radians(30)) * math.sqrt(200.0)

fig, ax = plt.subplots(figsize=(7, 4.2))
for kind, color in (("parallel", "tab:blue"), ("perp", "tab:red")):
    cfg = parse_config({
        "experiment": "scan-delta",
        "modulation": {"kind": kind},
        "grid": {"start": -3.0, "stop": 3.0, "count": 13},
        "sim": {"n_atoms": 400, "n_periods": 80.0, "seed": 11},
    })
    rec = run_delta_sweep(cfg)
    d = np.array(rec.results["deltas"]) / OMEGA_X
    v = [p["v_cm"][0] for p in rec.results["points"]]
    e = [p["stderr"][0] for p in rec.results["points"]]
    ax.errorbar(d, v, yerr=e, marker="o", ms=3, lw=1, color=color, label=kind)
    pred = rec.theory[kind]["delta_res_over_omega_x"][0]
    for sgn in (1, -1):
        ax.axvline(sgn * pred, color=color, ls="--", lw=0.8, alpha=0.6)
    pk = rec.results["peaks"]
    print(f"{kind}: predicted +-{pred:.3f} Omega_x, found "
          f"{[None if pk[b] is None else round(pk[b][0] / OMEGA_X, 3) for b in ('positive', 'negative')]}")
ax.set_xlabel("detuning  [Omega_x]")
ax.set_ylabel("v_cm,x  [omega_r/k]")
ax.set_title("CM-velocity resonances (dashed: predicted positions)")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "resonance_scan.png", dpi=130)
print(f"wrote {OUT / 'resonance_scan.png'}")
