"""
Binary checkpoints of eps-scaled states.

Layout (little endian)::

    b"HLIM"            magic
    u32                version (1 or 2)
    u32 u32 u32        nx, ny, nz
    f64                epsilon
    f64                time
    f64[nx*ny*nz] x4   sigma, v1, v2, w in physical space, x fastest
    -- version 2 only --
    u32                number of history arrays (4)
    f64[nx*ny*nz] x4   explicit terms of the previous cnab2 step

Version 2 carries the multistep history so that a cnab2 run resumes
exactly where it stopped.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .spectral import Grid, Parity, SpectralField, to_physical, to_spectral
from .state import CfState

__all__ = ["CheckpointError", "checkpoint_write", "checkpoint_read", "MAGIC"]

MAGIC = b"HLIM"
_HEAD = struct.Struct("<4sIIIIdd")
_PARITIES = (Parity.EVEN, Parity.EVEN, Parity.EVEN, Parity.ODD)


class CheckpointError(IOError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _array_bytes(f: SpectralField) -> bytes:
    a = np.asarray(to_physical(f), dtype="<f8")
    return a.tobytes(order="F")


def checkpoint_write(state: CfState, path, history=None) -> None:
    """Write ``state`` (and optionally the cnab2 history) to ``path``."""
    g = state.grid
    version = 1 if history is None else 2
    parts = [_HEAD.pack(MAGIC, version, g.nx, g.ny, g.nz, float(state.epsilon), float(state.time))]
    parts.extend(_array_bytes(f) for f in state.fields)
    if history is not None:
        history = tuple(history)
        if len(history) != 4:
            raise ValueError("history must hold four fields")
        parts.append(struct.pack("<I", 4))
        parts.extend(_array_bytes(f) for f in history)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(b"".join(parts))
    os.replace(tmp, path)


def _read_arrays(buf: bytes, offset: int, grid: Grid, count: int, dealias: bool):
    n = grid.size * 8
    out = []
    for i in range(count):
        if offset + n > len(buf):
            raise CheckpointError(f"truncated field array {i}", len(buf))
        a = np.frombuffer(buf, dtype="<f8", count=grid.size, offset=offset)
        a = a.reshape(grid.shape, order="F").astype(float)
        out.append(to_spectral(a, grid, _PARITIES[i], dealias=dealias))
        offset += n
    return out, offset


def checkpoint_read(path, with_history: bool = False, dealias: bool = True):
    """Load a checkpoint.

    Returns the :class:`CfState`, or ``(state, history)`` when
    ``with_history`` is set (``history`` is ``None`` for version 1 files).
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise CheckpointError("bad magic", 0)
    if len(buf) < _HEAD.size:
        raise CheckpointError("truncated header", len(buf))
    _, version, nx, ny, nz, eps, time = _HEAD.unpack_from(buf, 0)
    if version not in (1, 2):
        raise CheckpointError(f"unsupported version {version}", 4)
    try:
        grid = Grid(nx, ny, nz)
    except ValueError as exc:
        raise CheckpointError(str(exc), 8) from None
    fields, offset = _read_arrays(buf, _HEAD.size, grid, 4, dealias)
    history = None
    if version == 2:
        if offset + 4 > len(buf):
            raise CheckpointError("truncated history header", len(buf))
        (count,) = struct.unpack_from("<I", buf, offset)
        if count != 4:
            raise CheckpointError(f"bad history count {count}", offset)
        history, offset = _read_arrays(buf, offset + 4, grid, 4, dealias)
        history = tuple(history)
    if offset != len(buf):
        raise CheckpointError("trailing bytes after last array", offset)
    state = CfState(*fields, epsilon=eps, time=time)
    return (state, history) if with_history else state
