"""Dictionary files (CSV + JSON sidecar) and plain CSV matrix dumps."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import DimensionError
from .types import DataDictionary, ScheduleBox

FLOAT_FMT = "{:.17g}"


def dictionary_header(n_u: int, n_p: int, n_x: int) -> list:
    return (["k"] + [f"u_{i + 1}" for i in range(n_u)] + [f"p_{i + 1}" for i in range(n_p)]
            + [f"x_{i + 1}" for i in range(n_x)])


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_dictionary(d: DataDictionary, path, extra_meta: dict | None = None) -> Path:
    """Write ``path`` (CSV) and its JSON sidecar next to it.

    The CSV carries only the samples, so its bytes depend on the data alone.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dictionary_header(d.n_u, d.n_p, d.n_x))
        for k in range(d.N_d + 1):
            row = [str(k + 1)] + [FLOAT_FMT.format(v) for v in (*d.u[k], *d.p[k], *d.x[k])]
            w.writerow(row)
    meta = {
        "dims": {"n_u": d.n_u, "n_p": d.n_p, "n_x": d.n_x, "N_d": d.N_d},
        "schedule_box": d.box.to_dict(),
        "Ts": d.Ts,
        "provenance": d.provenance,
    }
    if extra_meta:
        meta.update(extra_meta)
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_dictionary(path) -> DataDictionary:
    """Load a dictionary written by :func:`write_dictionary`."""
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    dims = meta["dims"]
    n_u, n_p, n_x = dims["n_u"], dims["n_p"], dims["n_x"]
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header != dictionary_header(n_u, n_p, n_x):
        raise DimensionError(f"CSV header {header} does not match sidecar dims {dims}")
    data = np.array([[float(v) for v in r[1:]] for r in body], dtype=float)
    if data.shape[0] != dims["N_d"] + 1:
        raise DimensionError(f"expected {dims['N_d'] + 1} rows, found {data.shape[0]}")
    u = data[:, :n_u]
    p = data[:, n_u:n_u + n_p]
    x = data[:, n_u + n_p:]
    return DataDictionary(u, p, x, ScheduleBox.from_dict(meta["schedule_box"]), meta.get("Ts"),
                          meta.get("provenance", {}))


def dictionary_hash(d: DataDictionary) -> str:
    """SHA-256 over the raw sample bytes and the box."""
    h = hashlib.sha256()
    for arr in (d.u, d.p, d.x, d.box.lower, d.box.upper):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return h.hexdigest()


def write_matrix_csv(M, path) -> Path:
    """Row-major CSV dump, full precision, no header."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([FLOAT_FMT.format(v) for v in row])
    return path


def read_matrix_csv(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    return np.array([[float(v) for v in r] for r in rows], dtype=float)
