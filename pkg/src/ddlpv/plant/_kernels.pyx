# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels; mirror _kernels_py operation for operation."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, fabs, floor

cnp.import_array()

OK = 0
DIVERGED = 1
cdef double LIMIT = 1e6


cdef inline double _accel(double th, double om, double u, double a, double itau, double b) nogil:
    return -a * sin(th) - itau * om + b * u


cdef inline void _step(double* th_p, double* om_p, double u, double a, double itau, double b,
                       double sat, double Ts, int substeps) nogil:
    cdef double th = th_p[0], om = om_p[0]
    cdef double h, hh, h6, k1t, k1w, k2t, k2w, k3t, k3w, k4t, k4w
    cdef int i
    if u > sat:
        u = sat
    elif u < -sat:
        u = -sat
    h = Ts / substeps
    hh = 0.5 * h
    h6 = h / 6.0
    for i in range(substeps):
        k1t = om
        k1w = _accel(th, om, u, a, itau, b)
        k2t = om + hh * k1w
        k2w = _accel(th + hh * k1t, om + hh * k1w, u, a, itau, b)
        k3t = om + hh * k2w
        k3w = _accel(th + hh * k2t, om + hh * k2w, u, a, itau, b)
        k4t = om + h * k3w
        k4w = _accel(th + h * k3t, om + h * k3w, u, a, itau, b)
        th = th + h6 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        om = om + h6 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    th_p[0] = th
    om_p[0] = om


cdef inline double _sinc(double th) nogil:
    cdef double t2
    if fabs(th) < 1e-4:
        t2 = th * th
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0
    return sin(th) / th


def zoh_step(double th, double om, double u, double a, double itau, double b, double sat,
             double Ts, int substeps):
    _step(&th, &om, u, a, itau, b, sat, Ts, substeps)
    return th, om


def sinc(double th):
    return _sinc(th)


def rollout_open_loop(double th0, double om0, u_in, double a, double itau, double b, double sat,
                      double Ts, int substeps):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], k
    cdef cnp.ndarray[cnp.float64_t, ndim=2] x = np.zeros((n + 1, 2))
    cdef double th = th0, om = om0
    x[0, 0] = th
    x[0, 1] = om
    for k in range(n):
        _step(&th, &om, u[k], a, itau, b, sat, Ts, substeps)
        x[k + 1, 0] = th
        x[k + 1, 1] = om
        if not (fabs(th) <= LIMIT and fabs(om) <= LIMIT):
            return x, DIVERGED, k
    return x, OK, n


def rollout_closed_loop(double th0, double om0, double k0t, double k0w, double k1t, double k1w,
                        double scale, double center, theta_ref_in, dist_in, vel_noise_in,
                        double quant, int vel_mode, double a, double itau, double b, double sat,
                        double Ts, int substeps):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] theta_ref = np.ascontiguousarray(theta_ref_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dist = np.ascontiguousarray(dist_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vel_noise = np.ascontiguousarray(vel_noise_in, dtype=np.float64)
    cdef Py_ssize_t n = theta_ref.shape[0], k
    cdef cnp.ndarray[cnp.float64_t, ndim=2] x = np.zeros((n + 1, 2))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pl = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ul = np.zeros(n)
    cdef double th = th0, om = om0, prev, thm, omm, p, pt, e, uk
    x[0, 0] = th
    x[0, 1] = om
    prev = th - Ts * om
    if quant > 0.0:
        prev = quant * floor(prev / quant + 0.5)
    for k in range(n):
        thm = th
        if quant > 0.0:
            thm = quant * floor(th / quant + 0.5)
        if vel_mode == 1:
            omm = (thm - prev) / Ts
        else:
            omm = om
        omm = omm + vel_noise[k]
        prev = thm
        p = _sinc(th)
        pt = (p - center) / scale
        e = thm - theta_ref[k]
        uk = (k0t + pt * k1t) * e + (k0w + pt * k1w) * omm
        if uk > sat:
            uk = sat
        elif uk < -sat:
            uk = -sat
        pl[k] = p
        ul[k] = uk
        _step(&th, &om, uk, a, itau, b, sat, Ts, substeps)
        th = th + dist[k, 0]
        om = om + dist[k, 1]
        x[k + 1, 0] = th
        x[k + 1, 1] = om
        if not (fabs(th) <= LIMIT and fabs(om) <= LIMIT):
            return x, pl, ul, DIVERGED, k
    return x, pl, ul, OK, n
