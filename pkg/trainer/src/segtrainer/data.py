"""Dataset loading against the orchestrator's file formats.

Images arrive either as a directory of grayscale PNGs (one per id) or as
a packed row-matrix file with an `.ids` sidecar; masks follow the same
convention. Pixels map to float32 in [0, 1]; masks binarize at half
intensity. Predictions leave as 8-bit PNGs so the other side can score
them with its usual threshold.
"""

import json
import math
import struct
from pathlib import Path

import numpy as np
import torch
from PIL import Image

_MATRIX_HEADER = struct.Struct("<4sIQQB")
_MATRIX_MAGIC = b"UMX1"


def load_split(path) -> dict:
    split = json.loads(Path(path).read_text())
    for part in ("train", "val", "test"):
        if part not in split:
            raise ValueError(f"{path}: split file lacks {part!r}")
    return split


def split_ids(split: dict, which: str) -> list:
    if which == "all":
        return list(split["train"]) + list(split["val"]) + list(split["test"])
    return list(split[which])


def _load_matrix(path: Path) -> dict:
    raw = path.read_bytes()
    magic, version, rows, cols, width = _MATRIX_HEADER.unpack_from(raw)
    if magic != _MATRIX_MAGIC or version != 1:
        raise ValueError(f"{path}: not a row-matrix file")
    dtype = {4: "<f4", 8: "<f8"}.get(width)
    if dtype is None:
        raise ValueError(f"{path}: unsupported value width {width}")
    data = np.frombuffer(raw, dtype=dtype, offset=_MATRIX_HEADER.size, count=rows * cols)
    side = math.isqrt(cols)
    if side * side != cols:
        raise ValueError(f"{path}: rows of {cols} values are not square images")
    ids = Path(f"{path}.ids").read_text().splitlines()
    if len(ids) != rows:
        raise ValueError(f"{path}: id sidecar lists {len(ids)} rows, matrix has {rows}")
    frames = data.reshape(rows, side, side).astype(np.float32)
    return dict(zip(ids, frames))


def _load_png(path: Path) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("L"), dtype=np.float32) / 255.0


def load_images(source, ids) -> torch.Tensor:
    """Stack the named images into an (n, 1, h, w) float tensor."""
    source = Path(source)
    if source.is_file():
        table = _load_matrix(source)
        missing = [i for i in ids if i not in table]
        if missing:
            raise ValueError(f"{source}: no rows for ids {missing[:5]}")
        frames = [table[i] for i in ids]
    else:
        frames = [_load_png(source / f"{i}.png") for i in ids]
    if not frames:
        return torch.empty((0, 1, 0, 0))
    shapes = {f.shape for f in frames}
    if len(shapes) > 1:
        raise ValueError(f"{source}: images disagree on shape: {sorted(shapes)}")
    stack = torch.from_numpy(np.stack(frames)).unsqueeze(1)
    return stack


def load_masks(source, ids) -> torch.Tensor:
    masks = load_images(source, ids)
    return (masks >= 0.5).to(torch.float32)


def save_probability_png(path, prob: np.ndarray):
    quantized = np.rint(np.clip(prob, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="L").save(path)
