"""Spec (de)serialisation and small file writers shared by the modules and the CLI.

Floats are written with 17 significant digits so that reruns produce
byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import innovations as inn
from . import mixing as mix
from .errors import SpecError

__all__ = [
    "spec_to_dict",
    "mixing_from_dict",
    "innovation_from_dict",
    "write_csv",
    "write_json",
    "sha256_file",
    "fmt",
]

_MIXING = {"BetaType": mix.BetaType, "CanonicalRegVar": mix.CanonicalRegVar, "Farima": mix.Farima, "Tabulated": mix.Tabulated}
_INNOV = {"Gaussian": inn.Gaussian, "Stable": inn.Stable, "DomainAttraction": inn.DomainAttraction, "IdTriplet": inn.IdTriplet}


def fmt(x) -> str:
    return format(float(x), ".17g")


def spec_to_dict(spec) -> dict:
    """{"type": ClassName, **init fields}, recursing into nested specs."""
    out = {"type": type(spec).__name__}
    for f in dataclasses.fields(spec):
        if not f.init:
            continue
        v = getattr(spec, f.name)
        if dataclasses.is_dataclass(v):
            v = spec_to_dict(v)
        elif isinstance(v, tuple):
            v = [list(e) if isinstance(e, tuple) else e for e in v]
        out[f.name] = v
    return out


def _build(cls, d: dict, name: str):
    d = dict(d)
    d.pop("type", None)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    extra = set(d) - names
    if extra:
        raise SpecError(f"unknown fields for {name}: {sorted(extra)}")
    try:
        return cls(**d)
    except TypeError as e:
        raise SpecError(f"bad {name} spec: {e}") from None


def mixing_from_dict(d: dict) -> mix.MixingSpec:
    if not isinstance(d, dict) or d.get("type") not in _MIXING:
        raise SpecError(f"mixing spec needs type in {sorted(_MIXING)}")
    d = dict(d)
    if d["type"] == "Tabulated":
        if "csv" in d:
            return mix.load_tabulated_csv(d["csv"], d.get("beta"))
        d["x"] = tuple(d.get("x", ()))
        d["values"] = tuple(d.get("values", ()))
    return _build(_MIXING[d["type"]], d, d["type"])


def innovation_from_dict(d: dict) -> inn.InnovationSpec:
    if not isinstance(d, dict) or d.get("type") not in _INNOV:
        raise SpecError(f"innovation spec needs type in {sorted(_INNOV)}")
    d = dict(d)
    if d["type"] == "IdTriplet":
        levy = d.get("levy")
        if isinstance(levy, dict):
            lv = dict(levy)
            lv.pop("type", None)
            if lv.get("big_jump_tail") is not None:
                lv["big_jump_tail"] = tuple(tuple(e) for e in lv["big_jump_tail"])
            d["levy"] = _build(inn.LevySmallJumpSpec, lv, "LevySmallJumpSpec")
        if d.get("atoms") is not None:
            d["atoms"] = tuple(tuple(e) for e in d["atoms"])
    return _build(_INNOV[d["type"]], d, d["type"])


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return spec_to_dict(obj)
    return obj


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
