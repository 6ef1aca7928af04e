"""Reader for the orchestrator's run-manifest files.

One manifest describes one invocation: `key = value` lines, "#" for
comments, a fixed key vocabulary. The orchestrator owns the writer; this
side only parses and validates, and rejects unknown keys so the two ends
cannot drift apart silently.
"""

from dataclasses import dataclass
from pathlib import Path

_KEYS = (
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
_INT_KEYS = {"epochs", "batch_size", "patience", "seed"}
_OPTIONAL_KEYS = {"weights", "out_weights"}


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    arm: str
    mode: str
    images_dir: str
    masks_dir: str
    split_file: str
    split: str
    seed: int
    out_predictions: str
    out_weights: str = ""
    weights: str = ""
    epochs: int = 100
    batch_size: int = 8
    patience: int = 10
    beta: float = 0.5


def read_manifest(path) -> RunManifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"no manifest at {path}")
    values = {}
    for number, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ManifestError(f"{path}:{number}: expected 'key = value', got {raw!r}")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            raise ManifestError(f"{path}:{number}: unknown manifest key {key!r}")
        if key in values:
            raise ManifestError(f"{path}:{number}: duplicate manifest key {key!r}")
        values[key] = value

    missing = [k for k in _KEYS if k not in values and k not in _OPTIONAL_KEYS]
    if missing:
        raise ManifestError(f"{path}: missing manifest fields {missing}")
    kwargs = {}
    for key, value in values.items():
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key == "beta":
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        except ValueError:
            raise ManifestError(f"{path}: field {key} has a non-numeric value {value!r}")
    manifest = RunManifest(**kwargs)
    _validate(manifest, path)
    return manifest


def _validate(m: RunManifest, path):
    if m.mode not in ("train", "predict"):
        raise ManifestError(f"{path}: mode must be train or predict, got {m.mode!r}")
    if m.arm not in ("original", "pca"):
        raise ManifestError(f"{path}: arm must be original or pca, got {m.arm!r}")
    if m.split not in ("all", "train", "val", "test"):
        raise ManifestError(f"{path}: unknown split {m.split!r}")
    if m.mode == "train" and not m.out_weights:
        raise ManifestError(f"{path}: train manifests need out_weights")
    if m.mode == "predict" and not m.weights:
        raise ManifestError(f"{path}: predict manifests need weights")
    if m.epochs < 1 or m.batch_size < 1 or m.patience < 0:
        raise ManifestError(f"{path}: epochs/batch_size/patience out of range")
    if not 0.0 <= m.beta <= 1.0:
        raise ManifestError(f"{path}: beta must lie in [0, 1], got {m.beta}")
