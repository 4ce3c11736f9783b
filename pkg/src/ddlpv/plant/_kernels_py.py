"""Pure-Python simulation kernels.

Arithmetic is written in exactly the same order as the compiled kernels so
both backends produce bit-identical trajectories.
"""
import math

import numpy as np

OK = 0
DIVERGED = 1
LIMIT = 1e6


def _accel(th, om, u, a, itau, b):
    return -a * math.sin(th) - itau * om + b * u


def zoh_step(th, om, u, a, itau, b, sat, Ts, substeps):
    """One sampling period with the input clamped to [-sat, sat]; returns (theta, omega)."""
    if u > sat:
        u = sat
    elif u < -sat:
        u = -sat
    h = Ts / substeps
    hh = 0.5 * h
    h6 = h / 6.0
    for _ in range(substeps):
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
    return th, om


def sinc(th):
    if abs(th) < 1e-4:
        t2 = th * th
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0
    return math.sin(th) / th


def rollout_open_loop(th0, om0, u, a, itau, b, sat, Ts, substeps):
    """Simulate ``len(u)`` steps; returns (states (N+1, 2), status, last_step)."""
    n = len(u)
    x = np.zeros((n + 1, 2))
    th, om = float(th0), float(om0)
    x[0, 0], x[0, 1] = th, om
    for k in range(n):
        th, om = zoh_step(th, om, float(u[k]), a, itau, b, sat, Ts, substeps)
        x[k + 1, 0], x[k + 1, 1] = th, om
        if not (abs(th) <= LIMIT and abs(om) <= LIMIT):
            return x, DIVERGED, k
    return x, OK, n


def rollout_closed_loop(th0, om0, k0t, k0w, k1t, k1w, scale, center, theta_ref, dist,
                        vel_noise, quant, vel_mode, a, itau, b, sat, Ts, substeps):
    """Closed loop ``u = (K0 + pt K1)(x_meas - [theta_ref, 0])``, ``pt = (sinc(theta) - center) / scale``.

    ``dist`` (N, 2) is added to the state right after each step. ``vel_mode``
    0 feeds back the true velocity, 1 a backward difference of the measured
    angle. Returns (states (N+1, 2), p (N), u (N), status, last_step).
    """
    n = len(theta_ref)
    x = np.zeros((n + 1, 2))
    pl = np.zeros(n)
    ul = np.zeros(n)
    th, om = float(th0), float(om0)
    x[0, 0], x[0, 1] = th, om
    prev = th - Ts * om
    if quant > 0.0:
        prev = quant * math.floor(prev / quant + 0.5)
    for k in range(n):
        thm = th
        if quant > 0.0:
            thm = quant * math.floor(th / quant + 0.5)
        if vel_mode == 1:
            omm = (thm - prev) / Ts
        else:
            omm = om
        omm = omm + vel_noise[k]
        prev = thm
        p = sinc(th)
        pt = (p - center) / scale
        e = thm - theta_ref[k]
        uk = (k0t + pt * k1t) * e + (k0w + pt * k1w) * omm
        if uk > sat:
            uk = sat
        elif uk < -sat:
            uk = -sat
        pl[k] = p
        ul[k] = uk
        th, om = zoh_step(th, om, uk, a, itau, b, sat, Ts, substeps)
        th = th + dist[k, 0]
        om = om + dist[k, 1]
        x[k + 1, 0], x[k + 1, 1] = th, om
        if not (abs(th) <= LIMIT and abs(om) <= LIMIT):
            return x, pl, ul, DIVERGED, k
    return x, pl, ul, OK, n
