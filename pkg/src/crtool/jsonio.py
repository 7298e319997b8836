"""JSON encoding of complex arrays and toolkit values.

Complex scalars are ``[re, im]`` pairs; arrays are nested lists of those.
"""

from __future__ import annotations

import json

import numpy as np


def encode_complex(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ValueError("complex values must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def encode_value(v):
    """Recursively encode numpy arrays and complex scalars."""
    if isinstance(v, np.ndarray):
        return encode_complex(v) if np.iscomplexobj(v) else v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): encode_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [encode_value(x) for x in v]
    return v


def dumps(doc) -> str:
    return json.dumps(encode_value(doc), indent=2, sort_keys=True)


def point_to_json(point) -> dict:
    model = point.model
    doc = model.to_json()
    doc["ambient"] = encode_complex(point.ambient)
    doc["provenance"] = {k: encode_complex(v) for k, v in point.provenance.items()}
    return doc


def point_from_json(doc, policy=None):
    from .domains import DomainModel, boundary_point
    from .numerics import DEFAULT_POLICY

    model = DomainModel(doc["kind"], doc["m"], doc.get("n"), bool(doc.get("flat", False)))
    Z = decode_complex(doc["ambient"])
    prov = {}
    for k, v in (doc.get("provenance") or {}).items():
        val = decode_complex(v)
        prov[k] = complex(val) if val.ndim == 0 else val
    return boundary_point(model, Z, prov, policy or DEFAULT_POLICY)
