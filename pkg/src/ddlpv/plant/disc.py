"""Unbalanced-disc plant: continuous dynamics, sampled stepping, data collection."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import expm
from scipy.signal import butter, lfilter, lfilter_zi

from ..core.representation import window as extract_window
from ..core.types import DISC_BOX, DataDictionary, ScheduleBox
from ..errors import DivergenceError
from . import kernels

SINC_MIN = -0.21723362821122166  # global minimum of sin(t)/t, attained near t = 4.4934


@dataclass(frozen=True)
class DiscParams:
    """Physical constants of the disc and its sampled actuation.

    Defaults are illustrative pendulum-like values; ``b = Km / tau`` is the
    input gain of the acceleration equation.
    """

    mgl_over_J: float = 70.0
    tau: float = 0.4
    Km: float = 16.0
    sat: float = 10.0
    Ts: float = 0.01
    substeps: int = 20

    def __post_init__(self):
        for name in ("mgl_over_J", "tau", "Km", "sat", "Ts"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError("substeps must be a positive integer")
        if self.Ts / self.substeps > 1e-3 + 1e-15:
            raise ValueError("RK4 substeps must be at most 1 ms long")

    @property
    def b(self) -> float:
        return self.Km / self.tau

    @property
    def inv_tau(self) -> float:
        return 1.0 / self.tau

    def kernel_args(self) -> tuple:
        return (self.mgl_over_J, self.inv_tau, self.b, self.sat, self.Ts, int(self.substeps))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DiscParams":
        return cls(**{k: d[k] for k in ("mgl_over_J", "tau", "Km", "sat", "Ts", "substeps") if k in d})


@dataclass(frozen=True)
class SimState:
    theta: float
    omega: float
    k: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.omega)):
            raise DivergenceError("non-finite plant state", self.k)

    @property
    def x(self) -> np.ndarray:
        return np.array([self.theta, self.omega])


def ct_dynamics(s: SimState, u: float, params: DiscParams) -> tuple:
    """``(dtheta/dt, domega/dt)``; ``u`` is used as given (no saturation)."""
    acc = -params.mgl_over_J * math.sin(s.theta) - params.inv_tau * s.omega + params.b * u
    return s.omega, acc


def zoh_step(s: SimState, u: float, params: DiscParams) -> SimState:
    """Hold ``clip(u, -sat, sat)`` for one period and integrate with RK4.

    Raises:
        DivergenceError: ``|theta|`` or ``|omega|`` exceeds 1e6.
    """
    th, om = kernels.zoh_step(float(s.theta), float(s.omega), float(u), *params.kernel_args())
    if not (abs(th) <= 1e6 and abs(om) <= 1e6):
        raise DivergenceError(f"plant state diverged at step {s.k + 1}", s.k + 1)
    return SimState(th, om, s.k + 1)


def scheduling_sinc(theta):
    """``sin(theta) / theta``, evaluated by its series for ``|theta| < 1e-4``."""
    if np.ndim(theta) == 0:
        return kernels.sinc(float(theta))
    t = np.asarray(theta, dtype=float)
    return np.array([kernels.sinc(float(v)) for v in t.ravel()]).reshape(t.shape)


def generate_excitation(seed: int, n_steps: int, cutoff_hz: float, amplitude: float = 10.0,
                        Ts: float = 0.01) -> np.ndarray:
    """Low-pass filtered uniform noise in ``[-amplitude, amplitude]``.

    The filter is a first-order Butterworth section started in steady state
    at the first raw sample, so the output begins at that sample. Close to
    the Nyquist frequency the filter becomes transparent.

    Raises:
        ValueError: cutoff outside ``(0, 1 / (2 Ts))`` or bad sizes.
    """
    nyq = 0.5 / Ts
    if not 0 < cutoff_hz < nyq:
        raise ValueError(f"cutoff_hz must lie in (0, {nyq:g}), got {cutoff_hz}")
    if n_steps < 1 or amplitude <= 0:
        raise ValueError("n_steps must be >= 1 and amplitude > 0")
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-amplitude, amplitude, n_steps)
    b, a = butter(1, cutoff_hz / nyq)
    y, _ = lfilter(b, a, raw, zi=lfilter_zi(b, a) * raw[0])
    return np.clip(y, -amplitude, amplitude)


@dataclass(frozen=True)
class Collection:
    """Full open-loop record plus the extracted dictionary window."""

    record: DataDictionary
    dictionary: DataDictionary | None
    offset: int | None


def simulate_open_loop(params: DiscParams, u, x0=(0.0, 0.0)) -> np.ndarray:
    """States ``x_0 .. x_N`` under ``u_0 .. u_{N-1}``; raises on divergence."""
    u = np.asarray(u, dtype=float).ravel()
    x, status, k = kernels.rollout_open_loop(float(x0[0]), float(x0[1]), u, *params.kernel_args())
    if status != kernels.OK:
        raise DivergenceError(f"open-loop simulation diverged at step {k + 1}", k + 1)
    return np.asarray(x)


def collect_dictionary(params: DiscParams, excitation, window: tuple | None = None,
                       x0=(0.0, 0.0), box: ScheduleBox = DISC_BOX) -> Collection:
    """Run the plant under ``excitation`` and cut out a dictionary.

    One sample is recorded per input: ``(u_k, sinc(theta_k), x_k)`` for
    ``k = 0 .. len(excitation) - 1``, so a 100-sample input gives 100 samples.
    ``window = (offset, N_d)`` selects samples ``offset .. offset + N_d``.

    Raises:
        ValueError: the window does not fit in the record.
        DivergenceError: the simulation blew up.
    """
    u = np.asarray(excitation, dtype=float).ravel()
    n = len(u)
    if n < 2:
        raise ValueError("need at least two excitation samples")
    x = simulate_open_loop(params, u[:-1], x0)
    p = scheduling_sinc(x[:, 0])
    assert np.all(p >= SINC_MIN - 1e-12) and np.all(p <= 1.0)
    prov = {"source": "simulated disc", "params": params.to_dict(), "x0": [float(v) for v in x0]}
    record = DataDictionary(u[:, None], p[:, None], x, box, params.Ts, prov)
    if window is None:
        return Collection(record, None, None)
    offset, N_d = int(window[0]), int(window[1])
    if offset < 0 or N_d < 1 or offset + N_d + 1 > n:
        raise ValueError(f"window (offset {offset}, N_d {N_d}) does not fit in {n} samples")
    return Collection(record, extract_window(record, offset, N_d), offset)


def frozen_linearization(params: DiscParams, p: float) -> tuple:
    """Continuous-time LPV embedding matrices at frozen ``p``: ``sin(theta) = p theta``."""
    A = np.array([[0.0, 1.0], [-params.mgl_over_J * p, -params.inv_tau]])
    B = np.array([[0.0], [params.b]])
    return A, B


def frozen_discretization(params: DiscParams, p) -> tuple:
    """Exact ZOH discretization of the frozen embedding, usable as a ``model`` callable."""
    A, B = frozen_linearization(params, float(np.ravel(p)[0]))
    M = np.zeros((3, 3))
    M[:2, :2], M[:2, 2:] = A, B
    E = expm(M * params.Ts)
    return E[:2, :2], E[:2, 2:]


def mechanical_energy(theta, omega, params: DiscParams):
    """Energy per unit inertia, ``omega^2 / 2 + a (1 - cos theta)``."""
    return 0.5 * np.asarray(omega) ** 2 + params.mgl_over_J * (1.0 - np.cos(theta))
