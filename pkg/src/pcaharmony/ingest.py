"""Dataset loading, train/val/test splitting and flattening.

A dataset on disk is a directory of image PNGs with optional mask PNGs
paired by filename stem. Loading is order-stable (records sorted by id),
so repeated loads of the same directory always agree.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .images import IngestError, load_image, load_mask, resize_bilinear, resize_mask
from .umx import DataMatrix

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.7, 0.1, 0.2)
DEFAULT_SEED = 42


@dataclass
class DatasetRecord:
    """One sample: an id, a [0, 1] image and an optional {0, 1} mask."""

    id: str
    image: np.ndarray
    mask: np.ndarray | None = None


@dataclass
class DatasetLayout:
    """Where to find images and masks below a dataset root.

    image_glob is resolved relative to the root. mask_template names the
    mask for an image by substituting {stem} with the image filename stem;
    None means the dataset has no masks.
    """

    image_glob: str = "images/*.png"
    mask_template: str | None = "masks/{stem}.png"


def load_dataset(
    root,
    layout: DatasetLayout | None = None,
    resize: tuple[int, int] | None = None,
    require_tumor: bool = False,
) -> list[DatasetRecord]:
    """Load every image (and mask) under root into memory.

    Records come back sorted by id. A mask that exists but does not match
    its image's dimensions is an error, as is a missing mask when the
    layout declares a mask template. With require_tumor, records whose
    original mask has no positive pixel are dropped before any resizing.
    """
    root = Path(root)
    layout = layout or DatasetLayout()
    paths = sorted(root.glob(layout.image_glob))
    if not paths:
        logger.warning("no images under %s matching %s", root, layout.image_glob)
        return []
    records = []
    dropped = 0
    seen: set[str] = set()
    for path in paths:
        stem = path.stem
        if stem in seen:
            raise IngestError(f"{path}: duplicate record id {stem!r}")
        seen.add(stem)
        image = load_image(path)
        mask = None
        if layout.mask_template is not None:
            mask_path = root / layout.mask_template.format(stem=stem)
            if not mask_path.exists():
                raise IngestError(f"{mask_path}: missing mask for image {stem!r}")
            mask = load_mask(mask_path)
            if mask.shape != image.shape:
                raise IngestError(
                    f"{mask_path}: mask shape {mask.shape} does not match "
                    f"image shape {image.shape} for {stem!r}"
                )
            if require_tumor and not mask.any():
                dropped += 1
                continue
        if resize is not None:
            image = resize_bilinear(image, *resize)
            if mask is not None:
                mask = resize_mask(mask, *resize)
        records.append(DatasetRecord(stem, image, mask))
    if dropped:
        logger.info("dropped %d records with empty masks under %s", dropped, root)
    logger.info("loaded %d records from %s", len(records), root)
    return records


@dataclass
class SplitAssignment:
    """A disjoint train/val/test partition of record ids."""

    train: list[str]
    val: list[str]
    test: list[str]
    seed: int = DEFAULT_SEED

    @property
    def counts(self) -> tuple[int, int, int]:
        return len(self.train), len(self.val), len(self.test)


def split_ids(
    ids,
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = DEFAULT_SEED,
) -> tuple[list[str], list[str], list[str]]:
    """Partition ids into train/val/test with floor-sized leading groups.

    The procedure is fixed so splits are reproducible everywhere: ids are
    sorted lexicographically, permuted by numpy's PCG64 generator seeded
    with `seed`, then cut at floor(n * ratio) for train and val with the
    remainder going to test. Ratios are taken at their decimal face value
    so floor(0.7 * n) never suffers float representation accidents.
    """
    ids = [str(i) for i in ids]
    if len(ids) < 3:
        raise ValueError(f"need at least 3 records to split, got {len(ids)}")
    if len(set(ids)) != len(ids):
        raise ValueError("ids must be unique")
    fracs = [Fraction(str(float(r))) for r in ratios]
    if any(f <= 0 for f in fracs):
        raise ValueError(f"ratios must be positive, got {ratios}")
    if sum(fracs) != 1:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    ordered = sorted(ids)
    perm = np.random.default_rng(seed).permutation(len(ordered))
    shuffled = [ordered[i] for i in perm]
    n = len(shuffled)
    n_train = math.floor(n * fracs[0])
    n_val = math.floor(n * fracs[1])
    return (
        shuffled[:n_train],
        shuffled[n_train : n_train + n_val],
        shuffled[n_train + n_val :],
    )


def split_dataset(
    records: list[DatasetRecord],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = DEFAULT_SEED,
) -> SplitAssignment:
    train, val, test = split_ids([r.id for r in records], ratios, seed)
    return SplitAssignment(train, val, test, seed)


def save_split(path, split: SplitAssignment) -> None:
    payload = {
        "seed": split.seed,
        "train": split.train,
        "val": split.val,
        "test": split.test,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_split(path) -> SplitAssignment:
    payload = json.loads(Path(path).read_text())
    split = SplitAssignment(
        list(payload["train"]), list(payload["val"]), list(payload["test"]),
        int(payload["seed"]),
    )
    groups = split.train + split.val + split.test
    if len(set(groups)) != len(groups):
        raise ValueError(f"{path}: split groups overlap")
    return split


def flatten(records: list[DatasetRecord], field: str = "image") -> DataMatrix:
    """Stack records into one row-major row per sample."""
    if field not in ("image", "mask"):
        raise ValueError(f"field must be 'image' or 'mask', got {field!r}")
    if not records:
        raise ValueError("cannot flatten an empty record list")
    arrays = []
    for rec in records:
        arr = rec.image if field == "image" else rec.mask
        if arr is None:
            raise ValueError(f"record {rec.id!r} has no {field}")
        arrays.append(np.asarray(arr, dtype=np.float64))
    shape = arrays[0].shape
    for rec, arr in zip(records, arrays):
        if arr.shape != shape:
            raise ValueError(
                f"record {rec.id!r} has shape {arr.shape}, expected {shape}"
            )
    data = np.stack([a.ravel() for a in arrays])
    return DataMatrix(data, [r.id for r in records])


def unflatten(matrix: DataMatrix, height: int, width: int) -> list[np.ndarray]:
    """Reshape matrix rows back into 2-D arrays, in row order."""
    if height * width != matrix.cols:
        raise ValueError(
            f"cannot reshape {matrix.cols} columns into {height}x{width}"
        )
    return [row.reshape(height, width) for row in matrix.data]
