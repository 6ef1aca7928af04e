"""Manifest-driven U-Net training and inference.

The package is the executable side of a file-based contract: an
orchestrator writes a run manifest naming the datasets, split, arm and
output locations, invokes ``python -m segtrainer <manifest>``, and picks
up the weights, the per-epoch log and the prediction PNGs it asked for.
Nothing here imports the orchestrator.
"""

from segtrainer.loss import combined_loss, soft_dice_loss
from segtrainer.manifest import ManifestError, RunManifest, read_manifest
from segtrainer.train import TrainerError, TrainState, predict, run_epochs, train
from segtrainer.unet import DEFAULT_PARAM_COUNT, UNet, UNetSpec, build_model

__all__ = [
    "DEFAULT_PARAM_COUNT",
    "ManifestError",
    "RunManifest",
    "TrainState",
    "TrainerError",
    "UNet",
    "UNetSpec",
    "build_model",
    "combined_loss",
    "predict",
    "read_manifest",
    "run_epochs",
    "soft_dice_loss",
    "train",
]
