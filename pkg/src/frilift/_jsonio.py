"""Small helpers shared by the JSON (de)serializers."""
from __future__ import annotations

import numpy as np

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """A JSON document does not match the expected schema."""


def check_keys(doc, required=(), optional=(), where="document"):
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected an object, got {type(doc).__name__}")
    required, optional = set(required), set(optional)
    missing = required - doc.keys()
    if missing:
        raise SchemaError(f"{where}: missing field(s) {sorted(missing)}")
    unknown = doc.keys() - required - optional
    if unknown:
        raise SchemaError(f"{where}: unknown field(s) {sorted(unknown)}")


def check_version(doc, where="document"):
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{where}: schema_version must be {SCHEMA_VERSION}, got {version!r}")


def encode_complex(values) -> list:
    arr = np.atleast_1d(np.asarray(values, dtype=complex))
    return [[float(v.real), float(v.imag)] for v in arr]


def decode_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.size == 0:
        return np.zeros(0, dtype=complex)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise SchemaError("complex values must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def encode_scalar(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def decode_scalar(pair) -> complex:
    if isinstance(pair, (int, float)):
        return complex(pair)
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise SchemaError(f"expected a number or [re, im] pair, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))
