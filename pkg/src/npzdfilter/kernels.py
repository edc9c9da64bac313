"""Compiled inner loops for particle propagation.

These kernels repeat the arithmetic of `model` and `ar` verbatim for a
whole particle ensemble at once; `tests/test_npzd_ssm.py` pins them
against the pure-Python reference implementations. Layout of the packed
particle state, one row per particle:

    columns 0..3   pools N, P, Z, D (mg N m^-3)
    columns 4..12  community processes in model.BGC_COMPONENTS order
    column  13     chlorophyll-a diagnostic (mg Chla m^-3)
"""

import math

import numpy as np
from numba import njit

N_COLS = 14
X_COLS = 4
B_COLS = 9
CHLA_COL = 13


@njit(cache=True)
def advance_day(w, noise, mu_z, sigma_z, ar_coef, ar_scale, b_cap,
                mld, psi, temp, par, bcn,
                kw, ach, sd, fd, q10, tref, upsilon, chi_max, q_yield,
                kappa, dt, n_sub, out):
    """Advance every packed particle one day; writes into `out`.

    The community processes step once (AR recursion with the supplied
    standard-normal `noise`, shape (n, 9)); the pools are integrated by
    explicit Euler over `n_sub` substeps using the start-of-day
    processes. Temperature, irradiance and remineralization are frozen
    over the day; nutrient limitation, grazing, mortality and transport
    are re-evaluated each substep. Negative pools are clipped with the
    deficit charged to N. The chlorophyll diagnostic stored in `out`
    is evaluated at the end-of-day pools with the end-of-day processes,
    with light attenuation from the previous day's chlorophyll.
    """
    n = w.shape[0]
    tc = q10 ** ((temp - tref) / 10.0)
    h = dt / n_sub
    ex = (kappa + max(psi, 0.0)) / mld
    psi_m = psi / mld
    alpha = ach * q_yield
    for i in range(n):
        for j in range(B_COLS):
            zeta = math.exp(mu_z[j] + sigma_z[j] * noise[i, j])
            bv = w[i, X_COLS + j] * ar_coef[j] + zeta * ar_scale[j]
            if bv > b_cap[j]:
                bv = b_cap[j]
            out[i, X_COLS + j] = bv

        gmax = w[i, 4]
        lam = w[i, 5]
        an = w[i, 7]
        iz = w[i, 8]
        clz = w[i, 9]
        ez = w[i, 10]
        rd = w[i, 11]
        mq = w[i, 12]

        kz = (kw + ach * w[i, CHLA_COL]) * mld
        if kz > 0.0:
            e_mean = par * (-math.expm1(-kz)) / kz
        else:
            e_mean = par
        h_e = -math.expm1(-alpha * lam * e_mean / gmax)
        k_half = gmax * tc / an
        r = tc * rd

        nn = w[i, 0]
        p = w[i, 1]
        zz = w[i, 2]
        d = w[i, 3]
        for _ in range(n_sub):
            h_n = nn / (k_half + nn)
            denom = h_e + h_n
            g = tc * gmax * h_e * h_n / denom if denom > 0.0 else 0.0
            a = clz * p / iz
            av = a if upsilon == 1.0 else a ** upsilon
            gr = tc * iz * av / (1.0 + av)
            m = tc * mq * zz
            dp = g * p - gr * zz
            dz = ez * gr * zz - m * zz
            dd = (1.0 - ez) * fd * gr * zz + m * zz - r * d
            dn = -g * p + (1.0 - ez) * (1.0 - fd) * gr * zz + r * d
            dp += ex * (0.0 - p)
            dz += psi_m * (0.0 - zz)
            dd += -sd * d / mld + ex * (0.0 - d)
            dn += ex * (bcn - nn)
            nn += h * dn
            p += h * dp
            zz += h * dz
            d += h * dd
            if p < 0.0:
                nn += p
                p = 0.0
            if zz < 0.0:
                nn += zz
                zz = 0.0
            if d < 0.0:
                nn += d
                d = 0.0
            if nn < 0.0:
                nn = 0.0
        out[i, 0] = nn
        out[i, 1] = p
        out[i, 2] = zz
        out[i, 3] = d

        gmax2 = out[i, 4]
        lam2 = out[i, 5]
        rn2 = out[i, 6]
        an2 = out[i, 7]
        h_e2 = -math.expm1(-alpha * lam2 * e_mean / gmax2)
        h_n2 = nn / (gmax2 * tc / an2 + nn)
        den2 = rn2 * h_e2 + h_n2
        out[i, CHLA_COL] = p * (lam2 / chi_max) * h_n2 * tc / den2 if den2 > 0.0 else 0.0


@njit(cache=True)
def ar_burnin(b, noise, mu_z, sigma_z, ar_coef, ar_scale, b_cap):
    """Iterate the AR recursion in place; noise has shape (n_burn, n, 9)."""
    n_burn = noise.shape[0]
    n = b.shape[0]
    for k in range(n_burn):
        for i in range(n):
            for j in range(B_COLS):
                zeta = math.exp(mu_z[j] + sigma_z[j] * noise[k, i, j])
                bv = b[i, j] * ar_coef[j] + zeta * ar_scale[j]
                if bv > b_cap[j]:
                    bv = b_cap[j]
                b[i, j] = bv
