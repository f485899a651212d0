# isostokes/cli/serialization.py
"""
JSON encoding of numerical results.

Complex numbers become [re, im]; matrices are row-major nested lists. Floats
go through ``repr`` (shortest round-trip form), so decoding an encoded
value reproduces it bit for bit.
"""
from __future__ import annotations
from dataclasses import fields, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Union
import json
import math
import os
import tempfile

import numpy as np

def _float(x: float) -> Any:
    x = float(x)
    return x if math.isfinite(x) else None

def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy arrays, complex numbers, enums and dataclasses."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_float(obj.real), _float(obj.imag)]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return to_jsonable([to_jsonable(v) for v in obj]) if obj.ndim > 1 else [to_jsonable(complex(v)) for v in obj]
        return obj.astype(float).tolist() if obj.ndim else _float(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if hasattr(obj, "model_dump"):
        return to_jsonable(obj.model_dump(mode="python"))
    raise TypeError(f"cannot serialize {type(obj).__name__}")

def _entry(value: Any) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex entries are [re, im] pairs, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(float(value))

def decode_matrix(rows: Any) -> np.ndarray:
    """Square complex matrix from rows of numbers or [re, im] pairs."""
    if not isinstance(rows, (list, tuple)) or not rows:
        raise ValueError("matrix must be a non-empty list of rows")
    n = len(rows)
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, (list, tuple)) or len(row) != n:
            raise ValueError(f"row {i} must have {n} entries")
        for j, value in enumerate(row):
            out[i, j] = _entry(value)
    return out

def decode_complex(value: Any) -> complex:
    return _entry(value)

def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2, allow_nan=False) + "\n"

def write_atomic(path: Union[str, Path], text: str) -> Path:
    """Write through a temporary file in the target directory and rename."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target
