"""Numpy reference versions of the compiled kernels in ``_core.pyx``."""

import math

import numpy as np
from scipy.special import erf


def _couple(fam, c, s, z):
    if fam == 0:
        return c * z
    return c * z / (1.0 + z / s)


def _advance(u, other, lo, hi, st, d, p, a, fam, c, s, dx, dt, out):
    out[:] = 0.0
    if hi < lo:
        return 0.0
    m = (st.size - 1) // 2
    seg = u[lo : hi + 1]
    conv = np.convolve(seg, st, mode="full")[m : m + seg.size]
    adv = np.zeros_like(seg)
    if p > 0:
        nxt = np.append(seg[1:], 0.0)
        adv = (p / dx) * (nxt - seg)
    elif p < 0:
        prv = np.concatenate(([0.0], seg[:-1]))
        adv = (p / dx) * (seg - prv)
    val = seg + dt * (d * (conv - seg) + adv - a[lo : hi + 1] * seg + _couple(fam, c, s, other[lo : hi + 1]))
    neg = val < 0
    clamp = float(-val[neg].sum())
    val[neg] = 0.0
    out[lo : hi + 1] = val
    return clamp


def euler_fields(u, v, lo, hi, s1, s2, d1, d2, p, q, a, b, hfam, hc, hs, gfam, gc, gs, dx, dt, u_out, v_out):
    clamp = _advance(u, v, lo, hi, s1, d1, p, a, hfam, hc, hs, dx, dt, u_out)
    clamp += _advance(v, u, lo, hi, s2, d2, q, b, gfam, gc, gs, dx, dt, v_out)
    return clamp


def _tail(fam, R, sigma, mass, d):
    dc = np.clip(d, -R, R)
    if fam == 0:
        t = dc / R
        out = 0.5 - (15.0 / 16.0) * (t - 2.0 * t * t * t / 3.0 + t * t * t * t * t / 5.0)
    else:
        out = 0.5 * (mass - erf(dc / (sigma * math.sqrt(2.0)))) / mass
    out = np.where(d >= R, 0.0, np.where(d <= -R, 1.0, out))
    return np.clip(out, 0.0, 1.0)


def boundary_flux(u, lo, hi, x0, dx, pos, side, kfam, R, sigma, mass):
    if hi < lo:
        return 0.0
    idx = np.arange(lo, hi + 1)
    xi = x0 + idx * dx
    dist = (pos - xi) if side > 0 else (xi - pos)
    near = dist < R
    if not near.any():
        return 0.0
    return float(np.dot(u[idx[near]], _tail(kfam, R, sigma, mass, dist[near])) * dx)
