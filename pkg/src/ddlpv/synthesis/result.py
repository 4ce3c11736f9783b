"""Synthesis results and their JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..core.scheduling import SchedulingMap
from ..core.types import ControllerGains


@dataclass(frozen=True)
class Multiplier:
    """Full-block multiplier split into its three blocks."""

    Xi11: np.ndarray
    Xi12: np.ndarray
    Xi22: np.ndarray

    @classmethod
    def from_full(cls, Xi) -> "Multiplier":
        Xi = np.asarray(Xi, dtype=float)
        k = Xi.shape[0] // 2
        return cls(Xi[:k, :k].copy(), Xi[:k, k:].copy(), Xi[k:, k:].copy())

    @property
    def full(self) -> np.ndarray:
        return np.block([[self.Xi11, self.Xi12], [self.Xi12.T, self.Xi22]])


@dataclass
class SynthesisResult:
    """Outcome of a successful synthesis.

    ``gains`` act on the scheduling coordinates used during synthesis; when
    ``scheduling_map`` is set those are the rescaled coordinates and
    :meth:`physical_gains` gives the equivalent gains in the measured ``p``.
    """

    kind: str
    gains: ControllerGains
    Z: np.ndarray
    Y: np.ndarray
    F_Q: np.ndarray
    multiplier: Multiplier
    gamma: Optional[float]
    objective: float
    residuals: dict
    scheduling_map: Optional[SchedulingMap]
    cost_scale: float = 1.0
    status: str = "optimal"
    options: dict = field(default_factory=dict)
    dictionary_hash: Optional[str] = None
    weights: dict = field(default_factory=dict)
    solver_info: dict = field(default_factory=dict)

    @property
    def rescaled(self) -> bool:
        return self.scheduling_map is not None

    def physical_gains(self) -> ControllerGains:
        if self.scheduling_map is None:
            return self.gains
        return self.scheduling_map.gains_to_physical(self.gains)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "status": self.status,
            "gains": self.gains.to_dict(),
            "physical_gains": self.physical_gains().to_dict(),
            "Z": self.Z.tolist(),
            "Y": self.Y.tolist(),
            "F_Q": self.F_Q.tolist(),
            "Xi": self.multiplier.full.tolist(),
            "gamma": self.gamma,
            "objective": self.objective,
            "residuals": _jsonable(self.residuals),
            "scheduling_map": None if self.scheduling_map is None else self.scheduling_map.to_dict(),
            "rescaled": self.rescaled,
            "cost_scale": self.cost_scale,
            "options": _jsonable(self.options),
            "dictionary_sha256": self.dictionary_hash,
            "weights": _jsonable(self.weights),
            "solver": _jsonable(self.solver_info),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisResult":
        smap = d.get("scheduling_map")
        return cls(
            kind=d["kind"],
            gains=ControllerGains.from_dict(d["gains"]),
            Z=np.array(d["Z"], dtype=float),
            Y=np.array(d["Y"], dtype=float),
            F_Q=np.array(d["F_Q"], dtype=float),
            multiplier=Multiplier.from_full(np.array(d["Xi"], dtype=float)),
            gamma=d.get("gamma"),
            objective=float(d["objective"]),
            residuals=d.get("residuals", {}),
            scheduling_map=None if smap is None else SchedulingMap.from_dict(smap),
            cost_scale=float(d.get("cost_scale", 1.0)),
            status=d.get("status", "optimal"),
            options=d.get("options", {}),
            dictionary_hash=d.get("dictionary_sha256"),
            weights=d.get("weights", {}),
            solver_info=d.get("solver", {}),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "SynthesisResult":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x
