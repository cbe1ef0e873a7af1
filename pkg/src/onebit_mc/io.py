"""File formats for matrices, masks and whole one-bit problems.

Binary matrix layout: ``<u4 rows, <u4 cols`` header followed by ``rows*cols``
little-endian float64 values in row-major order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .model import DitherStack, ObservationMask, OneBitProblem, SignStack, as_matrix

_HEADER = struct.Struct("<II")


def write_matrix_csv(path, x) -> None:
    x = as_matrix(x)
    np.savetxt(path, x, delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    return as_matrix(np.loadtxt(path, delimiter=",", ndmin=2), str(path))


def write_matrix_bin(path, x) -> None:
    x = as_matrix(x)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*x.shape))
        fh.write(np.ascontiguousarray(x, dtype="<f8").tobytes())


def read_matrix_bin(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    rows, cols = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size:]
    if len(body) != 8 * rows * cols:
        raise ValueError(
            f"{path}: expected {8 * rows * cols} payload bytes for {rows}x{cols}, got {len(body)}"
        )
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(float)


def write_mask_csv(path, mask: ObservationMask) -> None:
    np.savetxt(path, mask.positions, delimiter=",", fmt="%d", header="i,j", comments="")


def read_mask_csv(path, dims) -> ObservationMask:
    pos = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    return ObservationMask.from_positions(dims, pos)


def save_problem(directory, p: OneBitProblem) -> Path:
    """Write ``mask.csv``, ``signs.csv``, ``dithers.csv`` and ``problem.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_mask_csv(d / "mask.csv", p.mask)
    np.savetxt(d / "signs.csv", p.signs.values, delimiter=",", fmt="%d")
    write_matrix_csv(d / "dithers.csv", p.dithers.values)
    meta = {
        "dims": list(p.dims),
        "m": p.m,
        "m_prime": p.m_prime,
        "noisy": p.noisy,
        "scheme": p.dithers.scheme,
        "rng_seed": p.dithers.rng_seed,
        "metadata": p.metadata,
    }
    (d / "problem.json").write_text(json.dumps(meta, indent=2, default=_jsonable))
    return d


def load_problem(directory) -> OneBitProblem:
    d = Path(directory)
    meta = json.loads((d / "problem.json").read_text())
    mask = read_mask_csv(d / "mask.csv", tuple(meta["dims"]))
    signs = np.loadtxt(d / "signs.csv", delimiter=",", ndmin=2)
    dithers = read_matrix_csv(d / "dithers.csv")
    return OneBitProblem(
        mask,
        SignStack(signs),
        DitherStack(dithers, meta.get("scheme", {"kind": "custom"}), meta.get("rng_seed")),
        noisy=meta.get("noisy", False),
        metadata=meta.get("metadata", {}),
    )


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
