"""Instance files (JSON) and the encoding of numbers in reports.

An instance looks like::

    {
      "dims": [2, 2],
      "states": [
        {"type": "pure", "vector": [[0.7071, 0], [0, 0], [0, 0], [0.7071, 0]]},
        {"type": "mixed", "matrix": [[[0.5, 0], ...], ...]}
      ],
      "delta": [1, 2],
      "priors": [0.5, 0.5]
    }

Complex numbers are always ``[re, im]`` pairs. Labels are 1-based.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .states import DensityMatrix, SpaceShape, StateEnsemble


class InstanceError(ValueError):
    """Malformed instance file; the message names the offending field."""


def _complex(value, where: str) -> complex:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    ):
        raise InstanceError(f"{where}: expected an [re, im] pair of numbers, got {value!r}")
    z = complex(float(value[0]), float(value[1]))
    if not np.isfinite(z):
        raise InstanceError(f"{where}: non-finite number")
    return z


def _vector(raw, d: int, where: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise InstanceError(f"{where}: expected a list of {d} [re, im] pairs")
    if len(raw) != d:
        raise InstanceError(f"{where}: expected {d} entries, got {len(raw)}")
    return np.array([_complex(x, f"{where}[{i}]") for i, x in enumerate(raw)])


def _matrix(raw, d: int, where: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != d:
        raise InstanceError(f"{where}: expected {d} rows")
    return np.array([_vector(row, d, f"{where}[{i}]") for i, row in enumerate(raw)])


def parse_instance(data: dict) -> StateEnsemble:
    if not isinstance(data, dict):
        raise InstanceError("top level: expected a JSON object")
    dims = data.get("dims")
    if (
        not isinstance(dims, list)
        or not dims
        or not all(isinstance(x, int) and not isinstance(x, bool) for x in dims)
    ):
        raise InstanceError("dims: expected a non-empty list of integers")
    try:
        shape = SpaceShape(tuple(dims))
    except ValueError as exc:
        raise InstanceError(f"dims: {exc}") from None
    d = shape.total
    raw_states = data.get("states")
    if not isinstance(raw_states, list):
        raise InstanceError("states: expected a list")
    states = []
    for k, entry in enumerate(raw_states):
        where = f"states[{k}]"
        if not isinstance(entry, dict):
            raise InstanceError(f"{where}: expected an object")
        kind = entry.get("type")
        try:
            if kind == "pure":
                v = _vector(entry.get("vector"), d, f"{where}.vector")
                states.append(DensityMatrix.from_vector(v, shape))
            elif kind == "mixed":
                m = _matrix(entry.get("matrix"), d, f"{where}.matrix")
                tr = np.trace(m).real
                states.append(DensityMatrix(shape, m, normalized=abs(tr - 1.0) <= 1e-10))
            else:
                raise InstanceError(f"{where}.type: expected 'pure' or 'mixed', got {kind!r}")
        except InstanceError:
            raise
        except ValueError as exc:
            raise InstanceError(f"{where}: {exc}") from None
    delta = data.get("delta") or ()
    if not isinstance(delta, (list, tuple)) or not all(isinstance(x, int) and not isinstance(x, bool) for x in delta):
        raise InstanceError("delta: expected a list of 1-based integers")
    priors = data.get("priors")
    if priors is not None and (
        not isinstance(priors, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in priors)
    ):
        raise InstanceError("priors: expected a list of numbers")
    try:
        return StateEnsemble(shape, tuple(states), tuple(delta), None if priors is None else tuple(priors))
    except ValueError as exc:
        field = "priors" if "prior" in str(exc) else "delta" if "delta" in str(exc) else "states"
        raise InstanceError(f"{field}: {exc}") from None


def load_instance(path) -> tuple[StateEnsemble, dict]:
    """Read and validate an instance file; returns the ensemble and raw JSON."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InstanceError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_instance(data), data


def encode_complex(a) -> list:
    """Nested ``[re, im]`` pairs for a complex array of any rank."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 0:
        z = complex(arr)
        return [float(z.real), float(z.imag)]
    return [encode_complex(x) for x in arr]


def decode_complex(raw) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def instance_from_vectors(vectors, dims, delta=None, priors=None) -> dict:
    data = {
        "dims": list(dims),
        "states": [{"type": "pure", "vector": encode_complex(np.asarray(v, dtype=complex))} for v in vectors],
    }
    if delta is not None:
        data["delta"] = list(delta)
    if priors is not None:
        data["priors"] = list(priors)
    return data
