"""Expand dataset configurations into the full set of run manifests.

For k datasets and two arms the plan holds 2k training runs (each also
predicts its own test split, giving the in-domain cells) and 2k(k-1)
prediction runs for the external cells.
"""

from dataclasses import dataclass
from pathlib import Path

from pcaharmony.experiment.manifest import RunManifest
from pcaharmony.experiment.table import ARMS


@dataclass(frozen=True)
class DatasetPaths:
    """Per-arm image directories plus the shared masks and split."""

    name: str
    images: dict  # arm -> images dir
    masks_dir: str
    split_file: str

    def __post_init__(self):
        missing = [arm for arm in ARMS if arm not in self.images]
        if missing:
            raise ValueError(f"dataset {self.name}: no images dir for arms {missing}")


@dataclass(frozen=True)
class PlannedRun:
    name: str  # manifest file stem, unique within the plan
    manifest: RunManifest


@dataclass(frozen=True)
class TrainerSettings:
    epochs: int = 100
    batch_size: int = 8
    patience: int = 10
    beta: float = 0.5
    seed: int = 42
    external_eval: str = "all"  # split predicted for external pairs


def weights_path(out_root, arm: str, dataset: str) -> Path:
    return Path(out_root) / "weights" / arm / f"{dataset}.weights"


def plan_experiment(datasets, out_root, settings: TrainerSettings | None = None):
    """Plan every training and prediction run for the experiment."""
    datasets = list(datasets)
    if len(datasets) < 2:
        raise ValueError("need at least 2 datasets; a single dataset has no external pairs")
    names = [ds.name for ds in datasets]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate dataset names in {names}")
    if settings is None:
        settings = TrainerSettings()
    out_root = Path(out_root)
    shared = dict(
        epochs=settings.epochs,
        batch_size=settings.batch_size,
        patience=settings.patience,
        beta=settings.beta,
        seed=settings.seed,
    )
    runs = []
    for arm in ARMS:
        for ds in datasets:
            runs.append(
                PlannedRun(
                    name=f"train__{arm}__{ds.name}",
                    manifest=RunManifest(
                        arm=arm,
                        mode="train",
                        images_dir=str(ds.images[arm]),
                        masks_dir=str(ds.masks_dir),
                        split_file=str(ds.split_file),
                        split="test",
                        out_weights=str(weights_path(out_root, arm, ds.name)),
                        out_predictions=str(
                            out_root / "predictions" / arm / f"{ds.name}__{ds.name}"
                        ),
                        **shared,
                    ),
                )
            )
    for arm in ARMS:
        for trained_on in datasets:
            for eval_ds in datasets:
                if eval_ds.name == trained_on.name:
                    continue
                runs.append(
                    PlannedRun(
                        name=f"predict__{arm}__{eval_ds.name}__from__{trained_on.name}",
                        manifest=RunManifest(
                            arm=arm,
                            mode="predict",
                            images_dir=str(eval_ds.images[arm]),
                            masks_dir=str(eval_ds.masks_dir),
                            split_file=str(eval_ds.split_file),
                            split=settings.external_eval,
                            weights=str(weights_path(out_root, arm, trained_on.name)),
                            out_predictions=str(
                                out_root
                                / "predictions"
                                / arm
                                / f"{eval_ds.name}__{trained_on.name}"
                            ),
                            **shared,
                        ),
                    )
                )
    return runs
