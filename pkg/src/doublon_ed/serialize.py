"""Deterministic serialization: JSON with pinned float formatting.

Floats are rendered with '%.12g' and complex values as [re, im] pairs, so
identical inputs produce byte-identical files across runs.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise ConfigError(f"non-finite value {x} cannot be serialized")
    return f"{x:.12g}"


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex numbers."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj, indent: int = 0) -> str:
    """Render JSON with sorted keys and pinned float format."""
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {dumps(obj[k], indent + 2).lstrip()}' for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        flat = all(isinstance(v, (int, float, bool)) or v is None for v in obj)
        if flat:
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        items = [pad + "  " + dumps(v, indent + 2).lstrip() for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _scalar(obj)


def _scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt_float(v)
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    raise ConfigError(f"cannot serialize {type(v).__name__}")


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(to_jsonable(obj)) + "\n")
