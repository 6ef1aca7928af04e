"""Flat matrix container and the UMX1 binary format.

A UMX1 file is a little-endian header followed by row-major scalars:

    bytes 0..3   magic "UMX1"
    bytes 4..7   u32 version (currently 1)
    bytes 8..15  u64 row count
    bytes 16..23 u64 column count
    byte  24     u8 scalar width, 4 for float32 or 8 for float64
    bytes 25..   rows * cols scalars

Row identifiers live in a sidecar text file next to the matrix, one id per
line, at the matrix path plus the ".ids" suffix.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"UMX1"
VERSION = 1
_HEADER = struct.Struct("<4sIQQB")


@dataclass
class DataMatrix:
    """A dataset flattened to one row per sample."""

    data: np.ndarray
    row_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {self.data.shape}")
        self.row_ids = [str(i) for i in self.row_ids]
        if len(self.row_ids) != self.data.shape[0]:
            raise ValueError(
                f"{len(self.row_ids)} row ids for {self.data.shape[0]} rows"
            )
        if len(set(self.row_ids)) != len(self.row_ids):
            raise ValueError("row ids must be unique")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


def ids_path(path) -> Path:
    return Path(str(path) + ".ids")


def save_matrix(path, matrix: DataMatrix, scalar_width: int = 8) -> None:
    """Write a DataMatrix as UMX1 plus its ids sidecar."""
    if scalar_width not in (4, 8):
        raise ValueError(f"scalar width must be 4 or 8, got {scalar_width}")
    dtype = "<f4" if scalar_width == 4 else "<f8"
    p = Path(path)
    header = _HEADER.pack(MAGIC, VERSION, matrix.rows, matrix.cols, scalar_width)
    p.write_bytes(header + np.ascontiguousarray(matrix.data, dtype=dtype).tobytes())
    ids_path(p).write_text("".join(i + "\n" for i in matrix.row_ids))


def load_matrix(path) -> DataMatrix:
    """Read a UMX1 file and its ids sidecar back into a DataMatrix."""
    p = Path(path)
    raw = p.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{p}: file too short for a UMX1 header")
    magic, version, rows, cols, width = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{p}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ValueError(f"{p}: unsupported version {version}")
    if width not in (4, 8):
        raise ValueError(f"{p}: bad scalar width {width}")
    expected = _HEADER.size + rows * cols * width
    if len(raw) != expected:
        raise ValueError(f"{p}: expected {expected} bytes, found {len(raw)}")
    dtype = "<f4" if width == 4 else "<f8"
    data = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size).reshape(rows, cols)
    sidecar = ids_path(p)
    if not sidecar.exists():
        raise ValueError(f"{p}: missing row id sidecar {sidecar.name}")
    row_ids = sidecar.read_text().splitlines()
    if len(row_ids) != rows:
        raise ValueError(
            f"{p}: {len(row_ids)} row ids in sidecar for {rows} matrix rows"
        )
    return DataMatrix(data.astype(np.float64), row_ids)
