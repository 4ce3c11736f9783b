"""Closed-loop experiments on the disc and the metrics read off their logs."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..core.io import FLOAT_FMT
from ..core.scheduling import SchedulingMap
from ..core.types import ControllerGains
from ..errors import DimensionError, DivergenceError
from . import kernels
from .disc import DiscParams, generate_excitation

KINDS = ("disturbance-rejection", "reference-tracking")
VELOCITY_MODES = {"exact": 0, "backward-difference": 1}
ENCODER_STEP = 2 * math.pi / 2000
LOG_COLUMNS = ("t", "theta", "omega", "p", "u", "theta_ref")

DISTURBANCE_TIMES = (1.5, 5.5, 9.5, 13.5, 17.5)
TRACKING_SETPOINTS = (0.0, math.pi / 4, 0.0, math.pi / 2, 0.0, 3 * math.pi / 4, 0.0, math.pi, 0.0)


def _pairs(seq, what):
    out = tuple((float(t), float(v)) for t, v in seq)
    times = [t for t, _ in out]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError(f"{what} times must be strictly increasing")
    return out


@dataclass(frozen=True)
class Scenario:
    """One closed-loop experiment.

    ``pulses`` are ``(time, omega_jump)`` pairs; ``setpoints`` are
    ``(time, theta_ref)`` pairs, the reference holding its value until the
    next entry (zero before the first one).
    """

    kind: str
    duration: float
    x0: tuple = (0.0, 0.0)
    pulses: tuple = ()
    setpoints: tuple = ((0.0, 0.0),)
    quantization: float = 0.0
    velocity_noise: float = 0.0
    velocity_mode: str = "exact"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"scenario kind must be one of {KINDS}")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.velocity_mode not in VELOCITY_MODES:
            raise ValueError(f"velocity_mode must be one of {tuple(VELOCITY_MODES)}")
        if self.quantization < 0 or self.velocity_noise < 0:
            raise ValueError("measurement options must be non-negative")
        pulses = _pairs(self.pulses, "pulse")
        setpoints = _pairs(self.setpoints, "setpoint")
        for t, _ in pulses + setpoints:
            if not 0 <= t <= self.duration:
                raise ValueError(f"event time {t} lies outside [0, {self.duration}]")
        object.__setattr__(self, "pulses", pulses)
        object.__setattr__(self, "setpoints", setpoints)
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))

    def n_steps(self, Ts: float) -> int:
        return int(round(self.duration / Ts))

    def reference(self, Ts: float) -> np.ndarray:
        t = np.arange(self.n_steps(Ts)) * Ts
        ref = np.zeros_like(t)
        for ts, v in self.setpoints:
            ref[t >= ts - 1e-9] = v
        return ref

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pulses"] = [list(p) for p in self.pulses]
        d["setpoints"] = [list(s) for s in self.setpoints]
        d["x0"] = list(self.x0)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(**d)


def disturbance_scenario(magnitude: float = 4.0, times=DISTURBANCE_TIMES, duration: float = 20.0,
                         **measurement) -> Scenario:
    """Regulation at zero with velocity kicks of alternating sign."""
    pulses = [(t, magnitude * (-1) ** i) for i, t in enumerate(times)]
    return Scenario("disturbance-rejection", duration, (0.0, 0.0), pulses, ((0.0, 0.0),), **measurement)


def tracking_scenario(values=TRACKING_SETPOINTS, duration: float = 20.0, x0=(0.0, 0.0),
                      **measurement) -> Scenario:
    """Setpoints held for equal shares of ``duration``."""
    dt = duration / len(values)
    return Scenario("reference-tracking", duration, x0, (),
                    tuple((i * dt, v) for i, v in enumerate(values)), **measurement)


def regulation_scenario(x0=(math.pi, 0.0), duration: float = 5.0, **measurement) -> Scenario:
    """Bring the disc from ``x0`` to ``theta = 0``."""
    return Scenario("reference-tracking", duration, x0, (), ((0.0, 0.0),), **measurement)


@dataclass
class TrajectoryLog:
    t: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    p: np.ndarray
    u: np.ndarray
    theta_ref: np.ndarray
    final_state: np.ndarray
    meta: dict = field(default_factory=dict)

    def columns(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in LOG_COLUMNS])

    def write_csv(self, path) -> Path:
        """Deterministic CSV: a ``#`` provenance line, the header, full-precision rows."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["# " + json.dumps(self.meta, sort_keys=True), ",".join(LOG_COLUMNS)]
        lines += [",".join(FLOAT_FMT.format(v) for v in row) for row in self.columns()]
        path.write_text("\n".join(lines) + "\n")
        return path

    @classmethod
    def read_csv(cls, path) -> "TrajectoryLog":
        text = Path(path).read_text().splitlines()
        meta = json.loads(text[0][1:]) if text and text[0].startswith("#") else {}
        body = [ln for ln in text if ln and not ln.startswith("#")]
        if tuple(body[0].split(",")) != LOG_COLUMNS:
            raise ValueError(f"unexpected trajectory header {body[0]!r}")
        a = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]])
        return cls(*(a[:, i] for i in range(len(LOG_COLUMNS))), final_state=np.full(2, np.nan),
                   meta=meta)


def _kernel_gains(gains: ControllerGains, smap: SchedulingMap | None):
    if gains.K0.shape != (1, 2) or gains.Kbar.shape != (1, 2):
        raise DimensionError("the disc controller needs gains with n_u = 1, n_x = 2, n_p = 1")
    if not (np.all(np.isfinite(gains.K0)) and np.all(np.isfinite(gains.Kbar))):
        raise ValueError("gains must be finite")
    smap = smap or SchedulingMap.identity(1)
    return (float(gains.K0[0, 0]), float(gains.K0[0, 1]), float(gains.Kbar[0, 0]),
            float(gains.Kbar[0, 1]), float(smap.scale[0]), float(smap.center[0]))


def rollout(params: DiscParams, gains: ControllerGains, smap: SchedulingMap | None, x0, theta_ref,
            dist, vel_noise, quantization=0.0, velocity_mode="exact"):
    """Raw closed-loop rollout; returns ``(states, p, u)`` or raises on divergence."""
    x, p, u, status, k = kernels.rollout_closed_loop(
        float(x0[0]), float(x0[1]), *_kernel_gains(gains, smap),
        np.ascontiguousarray(theta_ref, dtype=float), np.ascontiguousarray(dist, dtype=float),
        np.ascontiguousarray(vel_noise, dtype=float), float(quantization),
        VELOCITY_MODES[velocity_mode], *params.kernel_args())
    if status != kernels.OK:
        raise DivergenceError(f"closed loop diverged at step {k + 1}", k + 1)
    return np.asarray(x), np.asarray(p), np.asarray(u)


def run_closed_loop(params: DiscParams, gains: ControllerGains, scenario: Scenario,
                    scheduling_map: SchedulingMap | None = None) -> TrajectoryLog:
    """Deploy ``u = K(p_tilde) (x - [theta_ref, 0])`` on the nonlinear plant.

    ``p`` is the sinc of the measured absolute angle; ``scheduling_map``
    converts it to the coordinates the gains were designed in. Pulses add
    their magnitude to the angular velocity at their instant.

    Raises:
        DivergenceError: the closed loop blew up.
    """
    N = scenario.n_steps(params.Ts)
    ref = scenario.reference(params.Ts)
    dist = np.zeros((N, 2))
    x0 = list(scenario.x0)
    for t, mag in scenario.pulses:
        j = int(round(t / params.Ts))
        if j == 0:
            x0[1] += mag
        elif j <= N:
            dist[j - 1, 1] += mag
    rng = np.random.default_rng(scenario.seed)
    noise = rng.normal(0.0, scenario.velocity_noise, N) if scenario.velocity_noise > 0 else np.zeros(N)
    x, p, u = rollout(params, gains, scheduling_map, x0, ref, dist, noise, scenario.quantization,
                      scenario.velocity_mode)
    meta = {"seed": scenario.seed, "scenario": scenario.to_dict(), "params": params.to_dict(),
            "backend": kernels.BACKEND}
    t = np.arange(N) * params.Ts
    return TrajectoryLog(t, x[:N, 0], x[:N, 1], p, u, ref, x[N], meta)


def _segments(times, duration):
    ends = list(times[1:]) + [duration]
    return list(zip(times, ends))


def steady_state_errors(log: TrajectoryLog, scenario: Scenario, tail: float = 0.2) -> list:
    """Per setpoint, the largest ``|theta - theta_ref|`` over the final ``tail`` seconds."""
    out = []
    for (t0, t1), (_, ref) in zip(_segments([s[0] for s in scenario.setpoints], scenario.duration),
                                  scenario.setpoints):
        sel = (log.t >= t1 - tail - 1e-9) & (log.t < t1 - 1e-9)
        err = float(np.max(np.abs(log.theta[sel] - ref))) if sel.any() else float("nan")
        out.append({"start": t0, "end": t1, "theta_ref": ref, "steady_state_error": err})
    return out


def recovery_times(log: TrajectoryLog, scenario: Scenario, band: float = 0.05) -> list:
    """Per pulse, seconds until ``|theta|`` enters ``band`` for good (until the next pulse).

    ``None`` means the trajectory was still outside the band when the next
    pulse (or the end of the run) arrived.
    """
    out = []
    times = [p[0] for p in scenario.pulses]
    for t0, t1 in _segments(times, scenario.duration):
        sel = (log.t > t0 + 1e-9) & (log.t < t1 - 1e-9)
        tt, th = log.t[sel], np.abs(log.theta[sel])
        outside = np.nonzero(th >= band)[0]
        if not len(tt):
            rec = None
        elif not len(outside):
            rec = float(tt[0] - t0)
        elif outside[-1] == len(tt) - 1:
            rec = None
        else:
            rec = float(tt[outside[-1] + 1] - t0)
        out.append({"pulse_time": t0, "recovery_time": rec, "max_deflection": float(th.max()) if len(th) else 0.0})
    return out


def settling_time(log: TrajectoryLog, band: float, target: float = 0.0):
    """First time after which ``|theta - target| < band`` for the rest of the log; ``None`` if never."""
    outside = np.nonzero(np.abs(log.theta - target) >= band)[0]
    if not len(outside):
        return 0.0
    if outside[-1] == len(log.t) - 1:
        return None
    return float(log.t[outside[-1] + 1])


def band_limited_disturbance(seed: int, n_steps: int, cutoff_hz: float, amplitude, Ts: float):
    """Two-channel filtered noise; channel ``i`` bounded by ``amplitude[i]``."""
    amplitude = np.broadcast_to(np.asarray(amplitude, dtype=float), (2,))
    return np.column_stack([generate_excitation(seed * 2 + i, n_steps, cutoff_hz, amplitude[i], Ts)
                            for i in range(2)])


def empirical_l2_ratio(params: DiscParams, gains: ControllerGains, weights,
                       scheduling_map: SchedulingMap | None = None, seed: int = 0,
                       active: float = 2.0, tail: float = 8.0, cutoff_hz: float = 5.0,
                       amplitude=(1e-3, 1e-2)) -> dict:
    """Output-to-disturbance energy ratio of the closed loop from rest.

    The disturbance ``w_k`` is added to the sampled state,
    ``x_{k+1} = f(x_k, u_k) + w_k``, and is active for ``active`` seconds;
    the run continues for ``tail`` seconds so the output energy is
    collected. The output is ``z_k = (W_S^½ x_k, W_R^½ u_k)``.
    """
    from ..synthesis.weights import psd_sqrt

    Ts = params.Ts
    na, nt = int(round(active / Ts)), int(round(tail / Ts))
    w = np.zeros((na + nt, 2))
    w[:na] = band_limited_disturbance(seed, na, cutoff_hz, amplitude, Ts)
    zeros = np.zeros(na + nt)
    x, _, u = rollout(params, gains, scheduling_map, (0.0, 0.0), zeros, w, zeros)
    Sh, Rh = psd_sqrt(np.asarray(weights.W_S)), psd_sqrt(np.asarray(weights.W_R))
    zx = x[:-1] @ Sh.T
    zu = u[:, None] @ Rh.T
    num = float(np.sum(zx ** 2) + np.sum(zu ** 2))
    den = float(np.sum(w ** 2))
    return {"seed": seed, "ratio": math.sqrt(num / den), "output_energy": num,
            "disturbance_energy": den, "final_norm": float(np.linalg.norm(x[-1]))}
