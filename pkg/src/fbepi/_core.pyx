# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled time-stepping kernels; see _pycore.py for the reference versions."""

from libc.math cimport erf, sqrt

cdef inline double _couple(int fam, double c, double s, double z) nogil:
    if fam == 0:
        return c * z
    return c * z / (1.0 + z / s)


cdef inline double _tail(int fam, double R, double sigma, double mass, double d) nogil:
    cdef double t
    if d >= R:
        return 0.0
    if d <= -R:
        return 1.0
    if fam == 0:
        t = d / R
        t = 0.5 - (15.0 / 16.0) * (t - 2.0 * t * t * t / 3.0 + t * t * t * t * t / 5.0)
    else:
        t = 0.5 * (mass - erf(d / (sigma * sqrt(2.0)))) / mass
    if t < 0.0:
        return 0.0
    if t > 1.0:
        return 1.0
    return t


cdef double _advance(const double[::1] u, const double[::1] other, Py_ssize_t lo, Py_ssize_t hi,
                     const double[::1] st, double d, double p, const double[::1] a,
                     int fam, double c, double s, double dx, double dt,
                     double[::1] out) nogil:
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = (st.shape[0] - 1) // 2
    cdef Py_ssize_t i, j, jlo, jhi
    cdef double conv, adv, val, clamp = 0.0
    cdef double cp = p / dx
    for i in range(n):
        if i < lo or i > hi:
            out[i] = 0.0
            continue
        jlo = i - m
        if jlo < lo:
            jlo = lo
        jhi = i + m
        if jhi > hi:
            jhi = hi
        conv = 0.0
        for j in range(jlo, jhi + 1):
            conv += st[i - j + m] * u[j]
        if p > 0:
            adv = cp * ((u[i + 1] if i < hi else 0.0) - u[i])
        elif p < 0:
            adv = cp * (u[i] - (u[i - 1] if i > lo else 0.0))
        else:
            adv = 0.0
        val = u[i] + dt * (d * (conv - u[i]) + adv - a[i] * u[i] + _couple(fam, c, s, other[i]))
        if val < 0.0:
            clamp -= val
            val = 0.0
        out[i] = val
    return clamp


def euler_fields(const double[::1] u, const double[::1] v, Py_ssize_t lo, Py_ssize_t hi,
                 const double[::1] s1, const double[::1] s2, double d1, double d2,
                 double p, double q, const double[::1] a, const double[::1] b,
                 int hfam, double hc, double hs, int gfam, double gc, double gs,
                 double dx, double dt, double[::1] u_out, double[::1] v_out):
    """One explicit Euler step of both fields on nodes lo..hi; returns clamp mass."""
    cdef double clamp
    with nogil:
        clamp = _advance(u, v, lo, hi, s1, d1, p, a, hfam, hc, hs, dx, dt, u_out)
        clamp += _advance(v, u, lo, hi, s2, d2, q, b, gfam, gc, gs, dx, dt, v_out)
    return clamp


def boundary_flux(const double[::1] u, Py_ssize_t lo, Py_ssize_t hi, double x0, double dx,
                  double pos, int side, int kfam, double R, double sigma, double mass):
    """sum_i dx u_i T(dist_i) with dist = pos - x_i (side=+1) or x_i - pos (side=-1)."""
    cdef Py_ssize_t i
    cdef double total = 0.0, xi, dist
    with nogil:
        for i in range(lo, hi + 1):
            xi = x0 + i * dx
            dist = (pos - xi) if side > 0 else (xi - pos)
            if dist >= R:
                continue
            total += u[i] * _tail(kfam, R, sigma, mass, dist)
    return total * dx
