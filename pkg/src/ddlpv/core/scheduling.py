"""Affine re-scaling of the scheduling variable onto [-1, 1]^n_p."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ScheduleBoxError
from .types import ControllerGains, DataDictionary, ScheduleBox, _frozen


@dataclass(frozen=True)
class SchedulingMap:
    """``p_tilde = (p - center) / scale`` applied channel-wise."""

    scale: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.scale, dtype=float)).ravel()
        c = np.atleast_1d(np.asarray(self.center, dtype=float)).ravel()
        if s.shape != c.shape:
            raise ValueError("scale and center must have equal length")
        if np.any(s <= 0):
            raise ScheduleBoxError("scheduling map needs strictly positive scale")
        object.__setattr__(self, "scale", _frozen(s))
        object.__setattr__(self, "center", _frozen(c))

    @property
    def n_p(self) -> int:
        return self.scale.size

    def forward(self, p) -> np.ndarray:
        return (np.asarray(p, dtype=float) - self.center) / self.scale

    def inverse(self, pt) -> np.ndarray:
        return np.asarray(pt, dtype=float) * self.scale + self.center

    def map_box(self, box: ScheduleBox) -> ScheduleBox:
        return ScheduleBox(self.forward(box.lower), self.forward(box.upper))

    def gains_to_physical(self, K: ControllerGains) -> ControllerGains:
        """Re-express gains designed in ``p_tilde`` as an affine function of ``p``."""
        blocks = K.blocks()
        K0 = np.array(K.K0, copy=True)
        phys = []
        for Ki, s, c in zip(blocks, self.scale, self.center):
            K0 = K0 - (c / s) * Ki
            phys.append(Ki / s)
        Kbar = np.hstack(phys) if phys else np.zeros((K.n_u, 0))
        return ControllerGains(K0, Kbar)

    def to_dict(self) -> dict:
        return {"scale": self.scale.tolist(), "center": self.center.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SchedulingMap":
        return cls(d["scale"], d["center"])

    @classmethod
    def identity(cls, n_p: int) -> "SchedulingMap":
        return cls(np.ones(n_p), np.zeros(n_p))


def rescale_scheduling(box: ScheduleBox) -> SchedulingMap:
    """Map that sends ``box`` onto ``[-1, 1]^n_p``.

    Raises:
        ScheduleBoxError: if any channel has ``upper == lower``.
    """
    if box.is_degenerate:
        raise ScheduleBoxError("cannot rescale a degenerate scheduling box")
    return SchedulingMap(scale=0.5 * (box.upper - box.lower), center=box.center)


def rescale_dictionary(d: DataDictionary, smap: SchedulingMap) -> DataDictionary:
    """Dictionary with its scheduling samples and box expressed in ``p_tilde``."""
    prov = dict(d.provenance, scheduling_map=smap.to_dict())
    return DataDictionary(d.u, smap.forward(d.p), d.x, smap.map_box(d.box), d.Ts, prov)
