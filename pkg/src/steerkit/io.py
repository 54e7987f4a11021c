"""Versioned JSON exchange format for operator-bearing objects.

Every document is an object ``{"version": "1", "kind": ..., ...}`` with
``kind`` one of ``ma``, ``sa``, ``povm``, ``filter``, ``game``, ``state``.
Complex entries are written as ``[re, im]`` pairs; Python's float ``repr``
makes the round trip exact.

=========  =================================================================
kind       fields
=========  =================================================================
ma         ``dim``, ``data`` with shape ``(n_x, n_a, d, d)``
sa         ``dim``, ``data`` ``(n_x, n_a, d, d)``, ``reduced_state`` ``(d, d)``
povm       ``dim``, ``data`` ``(n_a, d, d)``
state      ``dim``, ``data`` ``(d, d)``, optional ``dims`` ``[d_A, d_B]``
filter     ``dim_in``, ``dim_out``, ``map_class``, ``kraus`` ``(k, d_out, d_in)``
game       ``dim``, ``priors`` ``(n_x, n_a)`` (real), ``data`` ``(n_x, n_a, d, d)``
=========  =================================================================
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from steerkit.assemblage import MeasurementAssemblage, Povm, StateAssemblage
from steerkit.filters import FilterMap, MapClass
from steerkit.games import GameEnsemble
from steerkit.linop import ValidationError

SCHEMA_VERSION = "1"
KINDS = ("ma", "sa", "povm", "filter", "game", "state")

__all__ = ["SCHEMA_VERSION", "KINDS", "ParseError", "parse_map_class", "encode_complex", "decode_complex", "to_doc", "from_doc", "dumps", "loads", "load"]


class ParseError(ValidationError):
    """Malformed or unsupported document."""


def encode_complex(a) -> list:
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(data, ndim: int, what: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: entries must be numbers or [re, im] pairs") from exc
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise ParseError(f"{what}: expected a {ndim}-dimensional array of [re, im] pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{what}: non-finite entries")
    return arr[..., 0] + 1j * arr[..., 1]


def to_doc(obj) -> dict[str, Any]:
    """Serialize a library object (or ``("state", matrix, dims)``) to a document."""
    doc: dict[str, Any] = {"version": SCHEMA_VERSION}
    if isinstance(obj, MeasurementAssemblage):
        doc.update(kind="ma", dim=obj.dim, data=encode_complex(obj.elements))
    elif isinstance(obj, StateAssemblage):
        doc.update(kind="sa", dim=obj.dim, data=encode_complex(obj.elements),
                   reduced_state=encode_complex(obj.reduced_state))
    elif isinstance(obj, Povm):
        doc.update(kind="povm", dim=obj.dim, data=encode_complex(obj.elements))
    elif isinstance(obj, FilterMap):
        doc.update(kind="filter", dim_in=obj.dim_in, dim_out=obj.dim_out,
                   map_class=obj.map_class.value, kraus=encode_complex(obj.kraus))
    elif isinstance(obj, GameEnsemble):
        doc.update(kind="game", dim=obj.dim, priors=obj.priors.tolist(), data=encode_complex(obj.states))
    elif isinstance(obj, np.ndarray) and obj.ndim == 2:
        doc.update(kind="state", dim=obj.shape[0], data=encode_complex(obj))
    elif isinstance(obj, tuple) and len(obj) == 3 and obj[0] == "state":
        _, rho, dims = obj
        rho = np.asarray(rho)
        doc.update(kind="state", dim=rho.shape[0], data=encode_complex(rho))
        if dims is not None:
            doc["dims"] = [int(k) for k in dims]
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return doc


def parse_map_class(name) -> MapClass:
    """Case-insensitive map class name; ``-`` and ``_`` are interchangeable."""
    return MapClass(str(name).upper().replace("-", "_"))


def _need(doc: dict, key: str):
    if key not in doc:
        raise ParseError(f"missing field {key!r} for kind {doc.get('kind')!r}")
    return doc[key]


def _check_dim(doc: dict, arr: np.ndarray) -> None:
    if "dim" in doc and int(doc["dim"]) != arr.shape[-1]:
        raise ParseError(f"declared dim {doc['dim']} does not match data dimension {arr.shape[-1]}")


def from_doc(doc: Any):
    """Parse a document; state documents return ``(matrix, dims or None)``."""
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {version!r} (expected {SCHEMA_VERSION!r})")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    if kind == "ma":
        els = decode_complex(_need(doc, "data"), 4, "ma data")
        _check_dim(doc, els)
        return MeasurementAssemblage(els)
    if kind == "sa":
        els = decode_complex(_need(doc, "data"), 4, "sa data")
        _check_dim(doc, els)
        rho = decode_complex(doc["reduced_state"], 2, "reduced_state") if "reduced_state" in doc else None
        return StateAssemblage(els, rho)
    if kind == "povm":
        els = decode_complex(_need(doc, "data"), 3, "povm data")
        _check_dim(doc, els)
        return Povm(els)
    if kind == "state":
        rho = decode_complex(_need(doc, "data"), 2, "state data")
        _check_dim(doc, rho)
        dims = doc.get("dims")
        if dims is not None:
            dims = tuple(int(k) for k in dims)
            if len(dims) != 2 or dims[0] * dims[1] != rho.shape[0]:
                raise ParseError(f"dims {dims} do not factor dimension {rho.shape[0]}")
        return rho, dims
    if kind == "filter":
        kraus = decode_complex(_need(doc, "kraus"), 3, "kraus")
        try:
            cls = parse_map_class(_need(doc, "map_class"))
        except ValueError as exc:
            raise ParseError(f"unknown map_class {doc['map_class']!r}") from exc
        return FilterMap(kraus, cls)
    pri = np.asarray(_need(doc, "priors"), dtype=float)
    states = decode_complex(_need(doc, "data"), 4, "game data")
    _check_dim(doc, states)
    return GameEnsemble(pri, states)


def dumps(obj) -> str:
    return json.dumps(to_doc(obj), indent=1) + "\n"


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    return from_doc(doc)


def load(path: str):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
