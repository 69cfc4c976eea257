"""On-disk formats: PDDS datasets and 16-bit PGM heatmaps with a JSON sidecar.

PDDS layout (little-endian)::

    b"PDDS" | u32 version=1 | u32 N | u32 count | count x (N*N f64 f, N*N f64 u)

The header is 16 bytes, so a file holds exactly ``16 + count*2*N*N*8`` bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .grid import GridSpec, PairSample, ScalarField

PDDS_MAGIC = b"PDDS"
PDDS_VERSION = 1
PDDS_HEADER = struct.Struct("<4sIII")
PGM_MAXVAL = 65535


class FormatError(ValueError):
    pass


def pdds_size(count: int, n: int) -> int:
    return PDDS_HEADER.size + count * 2 * n * n * 8


def write_pdds(path, pairs) -> Path:
    """Write pairs (``PairSample`` list or an ``(F, U)`` array tuple)."""
    if isinstance(pairs, tuple):
        F, U = (np.asarray(a, dtype="<f8") for a in pairs)
    else:
        pairs = list(pairs)
        if not pairs:
            raise ValueError("no pairs to write")
        F = np.stack([p.f.values for p in pairs]).astype("<f8")
        U = np.stack([p.u.values for p in pairs]).astype("<f8")
    if F.shape != U.shape or F.ndim != 3 or F.shape[1] != F.shape[2]:
        raise ValueError(f"bad dataset shapes {F.shape}, {U.shape}")
    count, n, _ = F.shape
    path = Path(path)
    body = np.stack([F.reshape(count, -1), U.reshape(count, -1)], axis=1)
    with open(path, "wb") as fh:
        fh.write(PDDS_HEADER.pack(PDDS_MAGIC, PDDS_VERSION, n, count))
        fh.write(np.ascontiguousarray(body, dtype="<f8").tobytes())
    return path


def read_pdds_arrays(path) -> tuple[np.ndarray, np.ndarray]:
    """``(F, U)`` with shape ``(count, N, N)`` each."""
    raw = Path(path).read_bytes()
    if len(raw) < PDDS_HEADER.size:
        raise FormatError("file too short for a PDDS header")
    magic, version, n, count = PDDS_HEADER.unpack_from(raw)
    if magic != PDDS_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != PDDS_VERSION:
        raise FormatError(f"unsupported PDDS version {version}")
    if len(raw) != pdds_size(count, n):
        raise FormatError(f"size {len(raw)} does not match header (count={count}, N={n})")
    body = np.frombuffer(raw, dtype="<f8", offset=PDDS_HEADER.size).reshape(count, 2, n, n)
    return body[:, 0].astype(np.float64), body[:, 1].astype(np.float64)


def read_pdds(path, provenance: str = "external") -> list[PairSample]:
    F, U = read_pdds_arrays(path)
    grid = GridSpec(F.shape[-1])
    return [PairSample(ScalarField(grid, f), ScalarField(grid, u), provenance) for f, u in zip(F, U)]


def write_pgm(path, field) -> dict:
    """Write a field as a 16-bit binary PGM with min-max scaling; returns the sidecar dict.

    Image row ``r`` is field row ``i = r`` (the x index), column is the y index.
    The sidecar ``<path>.json`` holds ``{min, max, N}``.
    """
    v = np.asarray(field, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("can only render a single 2-D field")
    lo, hi = float(v.min()), float(v.max())
    if hi > lo:
        pix = np.rint((v - lo) / (hi - lo) * PGM_MAXVAL).astype(">u2")
    else:
        pix = np.zeros(v.shape, dtype=">u2")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{v.shape[1]} {v.shape[0]}\n{PGM_MAXVAL}\n".encode("ascii"))
        fh.write(pix.tobytes())
    meta = {"min": lo, "max": hi, "N": int(v.shape[0])}
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2))
    return meta


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise FormatError("not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(raw, dtype=dtype, offset=pos + 1, count=w * h).reshape(h, w)


def invert_pgm(path) -> np.ndarray:
    """Recover a rendered field from its PGM and sidecar (up to quantisation)."""
    meta = json.loads(Path(str(path) + ".json").read_text())
    pix = read_pgm(path).astype(np.float64)
    return meta["min"] + pix / PGM_MAXVAL * (meta["max"] - meta["min"])
