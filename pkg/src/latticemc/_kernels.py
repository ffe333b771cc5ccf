"""Numba inner loop for the ensemble integrator.

Atoms are mutually independent for the whole run, so the kernel parallelizes
over atoms with each thread integrating its atoms through all steps; every
write goes to the owning atom's slot, which makes results bitwise identical
for any thread count.

Two pieces are inlined for speed and must track their reference
implementations exactly:

  * the counter-based uniform draw (same splitmix64 constants and counter
    protocol as rng.uniform_from_key; pinned by tests),
  * sin/cos, as a Cody-Waite reduction plus the classic fdlibm kernel
    polynomials (|error| < ~1e-15 for the |angle| <~ 1e6 range the dynamics
    produces; pinned against numpy trig by tests).
"""
from __future__ import annotations

import numpy as np
from numba import config, njit, prange

# portable threading layer (also silences the TBB-version probe warning)
config.THREADING_LAYER = "omp"

# splitmix64 constants (must match rng.py)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U1 = np.uint64(1)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_INV_2_53 = 2.0 ** -53

# Cody-Waite split of pi/2 and the fdlibm sin/cos kernel coefficients
_TWO_OVER_PI = 6.36619772367581382433e-01
_P1 = 1.57079632673412561417e+00
_P2 = 6.07710050650619224932e-11
_P3 = 2.02226624879595063154e-21
_S1 = -1.66666666666666324348e-01
_S2 = 8.33333333332248946124e-03
_S3 = -1.98412698298579493134e-04
_S4 = 2.75573137070700676789e-06
_S5 = -2.50507602534068634195e-08
_S6 = 1.58969099521155010221e-10
_C1 = 4.16666666666666019037e-02
_C2 = -1.38888888888741095749e-03
_C3 = 2.48015872894767294178e-05
_C4 = -2.75573143513906633035e-07
_C5 = 2.08757232129817482790e-09
_C6 = -1.13596475577881948265e-11

_TWO_PI = 6.283185307179586476925287


@njit(inline="always")
def _uniform(key, ctr):
    z = key + (ctr + _U1) * _GOLDEN
    z ^= z >> _U30
    z *= _MIX1
    z ^= z >> _U27
    z *= _MIX2
    z ^= z >> _U31
    return np.float64(z >> _U11) * _INV_2_53


@njit(inline="always")
def _sincos(x):
    kf = np.rint(x * _TWO_OVER_PI)
    r = ((x - kf * _P1) - kf * _P2) - kf * _P3
    q = np.int64(kf) & np.int64(3)
    zz = r * r
    ps = r + r * zz * (_S1 + zz * (_S2 + zz * (_S3 + zz * (_S4 + zz * (_S5 + zz * _S6)))))
    pc = 1.0 - 0.5 * zz + zz * zz * (_C1 + zz * (_C2 + zz * (_C3 + zz * (_C4 + zz * (_C5 + zz * _C6)))))
    if q == 0:
        return ps, pc
    elif q == 1:
        return pc, -ps
    elif q == 2:
        return -ps, -pc
    return -pc, ps


@njit(inline="always")
def _field(xi, yi, zi, t, kp, kz, ce, co, czf, with_mod, dk, delta, ampdk, drive_even):
    """Fused field_terms for one atom: forces split by sublevel parity plus
    the intensity even/odd parts feeding the jump rate, and cos(Phi) for
    the optional pump-rate modulation."""
    sx, cx = _sincos(kp * xi)
    sy, cy = _sincos(kp * yi)
    sz, cz = _sincos(kz * zi)
    cxcy = cx * cy
    ie = cx * cx + cy * cy
    io = 2.0 * cxcy * cz
    fe0 = ce * sx * cx
    fe1 = ce * sy * cy
    fo0 = co * sx * cy * cz
    fo1 = co * sy * cx * cz
    fo2 = czf * cxcy * sz
    cphi = 0.0
    if with_mod:
        sphi, cphi = _sincos(dk * xi - delta * t)
        drv = ampdk * sphi
        if drive_even:
            fe0 -= drv
        else:
            fo0 -= drv
    return fe0, fe1, fo0, fo1, fo2, ie, io, cphi


@njit(cache=True, parallel=True)
def integrate(x, y, z, px, py, pz, s, keys, counters,
              kp, kz, ce, co, czf, gdt18,
              with_mod, dk, delta, ampdk, drive_even, rate_m,
              recoil, rate_dt,
              t0, dt, n_steps, stride, record_state,
              snap_x, snap_y, snap_z, snap_px, snap_py, snap_pz, snap_s,
              ke_out):
    """Advance every atom by n_steps velocity-Verlet + jump steps, in place.

    record_state=True: write phase-space snapshots at rows (k+1)//stride
    whenever (k+1) % stride == 0 (row 0 is the caller's).
    record_state=False: write per-atom kinetic energy to ke_out rows
    (k+1)//stride - 1 at the same cadence.
    rate_m > 0 adds the polarization pattern's own pumping channel
    (2*Gamma_p/9) * rate_m * (1 - s*cos(Phi))/2 on top of the lattice rate
    (perp configuration only).
    rate_dt >= 0 overrides the jump probability per step (test hook).
    """
    n = x.shape[0]
    hdt = 0.5 * dt
    ddt = 2.0 * dt
    for i in prange(n):
        xi = x[i]
        yi = y[i]
        zi = z[i]
        pxi = px[i]
        pyi = py[i]
        pzi = pz[i]
        si = s[i]
        key = keys[i]
        ctr = counters[i]
        fe0, fe1, fo0, fo1, fo2, ie, io, cphi = _field(
            xi, yi, zi, t0, kp, kz, ce, co, czf, with_mod, dk, delta, ampdk, drive_even)
        for k in range(n_steps):
            pxi += hdt * (fe0 + si * fo0)
            pyi += hdt * (fe1 + si * fo1)
            pzi += hdt * (si * fo2)
            xi += ddt * pxi
            yi += ddt * pyi
            zi += ddt * pzi
            tn = t0 + (k + 1) * dt
            fe0, fe1, fo0, fo1, fo2, ie, io, cphi = _field(
                xi, yi, zi, tn, kp, kz, ce, co, czf, with_mod, dk, delta, ampdk, drive_even)
            pxi += hdt * (fe0 + si * fo0)
            pyi += hdt * (fe1 + si * fo1)
            pzi += hdt * (si * fo2)

            if rate_dt >= 0.0:
                pj = rate_dt
            else:
                # lattice pumping + the pattern's own sigma-/sigma+ channel
                pj = gdt18 * (ie - si * io + 2.0 * rate_m * (1.0 - si * cphi))
            u = _uniform(key, ctr)
            ctr += _U1
            if u < pj:
                si = -si
                if recoil:
                    u0 = _uniform(key, ctr)
                    u1 = _uniform(key, ctr + _U1)
                    u2 = _uniform(key, ctr + np.uint64(2))
                    u3 = _uniform(key, ctr + np.uint64(3))
                    ctr += np.uint64(4)
                    zc = 1.0 - 2.0 * u0
                    rho = np.sqrt(max(1.0 - zc * zc, 0.0))
                    sa, ca = _sincos(_TWO_PI * u1)
                    pxi += rho * ca
                    pyi += rho * sa
                    pzi += zc
                    zc = 1.0 - 2.0 * u2
                    rho = np.sqrt(max(1.0 - zc * zc, 0.0))
                    sa, ca = _sincos(_TWO_PI * u3)
                    pxi += rho * ca
                    pyi += rho * sa
                    pzi += zc

            if (k + 1) % stride == 0:
                row = (k + 1) // stride
                if record_state:
                    snap_x[row, i] = xi
                    snap_y[row, i] = yi
                    snap_z[row, i] = zi
                    snap_px[row, i] = pxi
                    snap_py[row, i] = pyi
                    snap_pz[row, i] = pzi
                    snap_s[row, i] = np.int8(si)
                else:
                    ke_out[row - 1, i] = pxi * pxi + pyi * pyi + pzi * pzi

        x[i] = xi
        y[i] = yi
        z[i] = zi
        px[i] = pxi
        py[i] = pyi
        pz[i] = pzi
        s[i] = si
        counters[i] = ctr
