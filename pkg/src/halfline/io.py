"""JSON and CSV serialization of the library containers.

JSON documents carry a ``"type"`` tag and one entry per dataclass field.
Complex values are written as ``{"__complex__": [[re, im], ...]}`` (or a
single pair for scalars). Floats go through ``repr`` so the round trip is
exact; NaN and infinities use the JSON extensions ``NaN``/``Infinity``.
"""
from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .types import (IFunction, JostData, KreinKernel, PhaseShiftSequence, PotentialGrid,
                    QuarkoniumData, ScatteringData, SpectralFunction, TransformationKernel,
                    WaveFunctionTable)

TYPES = {cls.__name__: cls for cls in (
    PotentialGrid, ScatteringData, JostData, SpectralFunction, IFunction,
    TransformationKernel, WaveFunctionTable, KreinKernel, PhaseShiftSequence, QuarkoniumData)}

_CPX = "__complex__"


def _encode(v):
    if v is None or isinstance(v, (bool, str, int)):
        return v
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {_CPX: [float(v.real), float(v.imag)]}
    if isinstance(v, np.integer):
        return int(v)
    arr = np.asarray(v)
    if arr.dtype == object:
        return [_encode(x) for x in v]
    if np.iscomplexobj(arr):
        pairs = np.stack([arr.real, arr.imag], axis=-1)
        return {_CPX: pairs.tolist()}
    return arr.tolist()


def _decode(v):
    if isinstance(v, dict) and _CPX in v:
        a = np.asarray(v[_CPX], dtype=float)
        out = a[..., 0] + 1j * a[..., 1]
        return complex(out) if out.ndim == 0 else out
    if isinstance(v, list):
        if any(isinstance(x, dict) for x in v):
            return [_decode(x) for x in v]
        return v
    return v


def to_dict(obj) -> dict:
    """Tagged plain-Python form of a library container."""
    name = type(obj).__name__
    if name not in TYPES:
        raise TypeError(f"cannot serialize {name}")
    out = {"type": name}
    for f in dataclasses.fields(obj):
        out[f.name] = _encode(getattr(obj, f.name))
    return out


def from_dict(d: dict):
    try:
        cls = TYPES[d["type"]]
    except KeyError as exc:
        raise ConfigError(f"type: unknown or missing ({d.get('type')!r})") from exc
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name in d:
            kw[f.name] = _decode(d[f.name])
    if cls is SpectralFunction:
        kw["discrete_points"] = tuple(tuple(p) for p in kw.get("discrete_points", ()))
    return cls(**kw)


def dumps(obj, **kw) -> str:
    return json.dumps(to_dict(obj), **kw)


def loads(text: str):
    return from_dict(json.loads(text))


def save_json(obj, path) -> None:
    Path(path).write_text(dumps(obj, indent=1))


def load_json(path):
    return loads(Path(path).read_text())


def write_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=1, sort_keys=True, default=_encode))


# -- CSV -----------------------------------------------------------------------

CSV_COLUMNS = {
    "potential": ("x", "q"),
    "scattering": ("k", "ReS", "ImS"),
    "phase": ("k", "delta"),
    "spectral": ("lambda", "density"),
    "phase_shifts": ("ell", "delta_ell"),
}


def write_csv(path, kind: str, *columns) -> None:
    """Write columns under the fixed header for ``kind``."""
    header = CSV_COLUMNS[kind]
    if len(columns) != len(header):
        raise ValueError(f"{kind} needs columns {header}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) if not isinstance(v, (int, np.integer)) else int(v) for v in row])


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def potential_csv(q: PotentialGrid, path) -> None:
    write_csv(path, "potential", q.xs, q.qs)


def scattering_csv(sd: ScatteringData, path) -> None:
    write_csv(path, "scattering", sd.ks, sd.S.real, sd.S.imag)


def load_potential(path, decay_class: str = "L11", support_radius=None) -> PotentialGrid:
    """PotentialGrid from a JSON document or an (x, q) CSV file."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        cols = read_csv(path)
        return PotentialGrid(cols["x"], cols["q"], support_radius, decay_class)
    obj = load_json(path)
    if not isinstance(obj, PotentialGrid):
        raise ConfigError(f"{path}: expected a PotentialGrid, got {type(obj).__name__}")
    return obj
