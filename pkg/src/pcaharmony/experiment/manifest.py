"""Flat key=value run manifests, the file contract with the trainer.

A manifest describes one trainer invocation.  Training runs fit a model
and then predict their own dataset's test split; prediction runs load
existing weights and predict a chosen split of some dataset.  Lines are
`key = value`, "#" starts a comment, and unknown keys are rejected so a
typo cannot silently change a run.
"""

from dataclasses import dataclass
from pathlib import Path

_MODES = ("train", "predict")
_ARMS = ("original", "pca")
_SPLITS = ("all", "train", "val", "test")


@dataclass(frozen=True)
class RunManifest:
    arm: str
    mode: str
    images_dir: str
    masks_dir: str
    split_file: str
    split: str  # which ids get predictions
    seed: int
    out_predictions: str
    out_weights: str = ""  # train mode
    weights: str = ""  # predict mode: weights to load
    epochs: int = 100
    batch_size: int = 8
    patience: int = 10
    beta: float = 0.5

    def __post_init__(self):
        if self.arm not in _ARMS:
            raise ValueError(f"arm must be one of {_ARMS}, got {self.arm!r}")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.split not in _SPLITS:
            raise ValueError(f"split must be one of {_SPLITS}, got {self.split!r}")
        for name in ("images_dir", "masks_dir", "split_file", "out_predictions"):
            if not getattr(self, name):
                raise ValueError(f"manifest field {name} must not be empty")
        if self.mode == "train" and not self.out_weights:
            raise ValueError("train manifests need out_weights")
        if self.mode == "predict" and not self.weights:
            raise ValueError("predict manifests need weights to load")
        if self.epochs < 1:
            raise ValueError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.patience < 0:
            raise ValueError(f"patience must not be negative, got {self.patience}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")


_FIELD_ORDER = (
    "arm",
    "mode",
    "images_dir",
    "masks_dir",
    "split_file",
    "split",
    "epochs",
    "batch_size",
    "patience",
    "beta",
    "seed",
    "weights",
    "out_weights",
    "out_predictions",
)

_INT_FIELDS = {"epochs", "batch_size", "patience", "seed"}
_FLOAT_FIELDS = {"beta"}
_OPTIONAL_FIELDS = {"weights", "out_weights"}


def write_manifest(path, manifest: RunManifest):
    lines = ["# run manifest"]
    for field in _FIELD_ORDER:
        value = getattr(manifest, field)
        if field in _OPTIONAL_FIELDS and value == "":
            continue
        lines.append(f"{field} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> RunManifest:
    path = Path(path)
    values = {}
    for number, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{number}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_ORDER:
            raise ValueError(f"{path}:{number}: unknown manifest key {key!r}")
        if key in values:
            raise ValueError(f"{path}:{number}: duplicate manifest key {key!r}")
        values[key] = value
    missing = [
        field
        for field in _FIELD_ORDER
        if field not in values and field not in _OPTIONAL_FIELDS
    ]
    if missing:
        raise ValueError(f"{path}: missing manifest fields {missing}")
    kwargs = {}
    for key, value in values.items():
        if key in _INT_FIELDS:
            try:
                kwargs[key] = int(value)
            except ValueError:
                raise ValueError(f"{path}: field {key} must be an integer, got {value!r}") from None
        elif key in _FLOAT_FIELDS:
            try:
                kwargs[key] = float(value)
            except ValueError:
                raise ValueError(f"{path}: field {key} must be a number, got {value!r}") from None
        else:
            kwargs[key] = value
    return RunManifest(**kwargs)
