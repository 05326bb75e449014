"""Field snapshot files and solve-result sidecars.

Snapshot layout (little-endian throughout):

    bytes 0..3    magic "CHQF"
    bytes 4..7    format version (u32, currently 1)
    bytes 8..11   dimension N (u32)
    next 4*N      points per axis (u32 each)
    next 8*N      extent per axis (f64 each)
    rest          float64 samples, row-major

Round-trips are bitwise; any malformed header raises FormatError with the
byte offset of the defect.  Solve results additionally get a key = value
text sidecar next to the snapshot.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, OutOfRange
from .spectral import Field, Grid

__all__ = ["save_field", "load_field", "save_solve_sidecar"]

MAGIC = b"CHQF"
VERSION = 1


def save_field(u: Field, path) -> None:
    g = u.grid
    header = MAGIC + struct.pack("<II", VERSION, g.N)
    header += struct.pack(f"<{g.N}I", *((g.points,) * g.N))
    header += struct.pack(f"<{g.N}d", *((g.extent,) * g.N))
    data = np.ascontiguousarray(u.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + data)


def load_field(path) -> Field:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise FormatError("file shorter than the magic", 0)
    if raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}", 0)
    if len(raw) < 12:
        raise FormatError("truncated fixed header", 4)
    version, ndim = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}", 4)
    if ndim not in (1, 2, 3):
        raise FormatError(f"bad dimension {ndim}", 8)
    off = 12
    if len(raw) < off + 4 * ndim + 8 * ndim:
        raise FormatError("truncated axis tables", off)
    points = struct.unpack_from(f"<{ndim}I", raw, off)
    off += 4 * ndim
    extents = struct.unpack_from(f"<{ndim}d", raw, off)
    off += 8 * ndim
    if len(set(points)) != 1 or len(set(extents)) != 1:
        raise FormatError("anisotropic grids are not supported", 12)
    n, ext = points[0], extents[0]
    count = n ** ndim
    expected = off + 8 * count
    if len(raw) != expected:
        raise FormatError(
            f"payload has {len(raw) - off} bytes, expected {8 * count}", off)
    vals = np.frombuffer(raw, dtype="<f8", count=count, offset=off)
    try:
        grid = Grid(ndim, ext, n)
    except OutOfRange as exc:
        raise FormatError(f"invalid grid in header: {exc}", 8) from exc
    return Field(grid, vals.reshape((n,) * ndim))


def save_solve_sidecar(result, path, config=None, extra=None) -> None:
    """key = value companion file for a SolveResult."""
    lines = [
        "format = choqlab-solve v1",
        f"level = {result.level!r}",
        f"lambda = {result.lam!r}",
        f"poho_residual = {result.poho_residual!r}",
        f"grad_residual = {result.grad_residual!r}",
        f"iterations = {result.iterations}",
        f"converged = {result.converged}",
        f"mass = {result.mass!r}",
    ]
    if config is not None:
        for name in ("step", "grad_tol", "poho_tol", "max_iter", "refine"):
            lines.append(f"config.{name} = {getattr(config, name)!r}")
    if extra:
        for k, v in extra.items():
            lines.append(f"{k} = {v!r}")
    Path(path).write_text("\n".join(lines) + "\n")
