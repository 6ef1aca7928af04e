"""Training protocol and inference.

One manifest, one process. Training fits on the train split, monitors
the combined loss on the val split, keeps the best snapshot, and stops
at the epoch cap or when validation has not improved for `patience`
epochs. The epoch loop itself is a plain function over callables so the
stopping protocol can be exercised without touching a real model.
"""

import math
import sys
from dataclasses import dataclass
from pathlib import Path

import torch

from segtrainer.data import (
    load_images,
    load_masks,
    load_split,
    save_probability_png,
    split_ids,
)
from segtrainer.loss import combined_loss
from segtrainer.manifest import RunManifest
from segtrainer.unet import build_model

LEARNING_RATE = 1e-3


class TrainerError(RuntimeError):
    pass


@dataclass
class TrainState:
    epoch: int = 0
    best_val: float = math.inf
    best_epoch: int = 0
    since_improvement: int = 0


def run_epochs(
    max_epochs: int,
    patience: int,
    train_step,
    validate,
    snapshot,
    restore,
    on_epoch=None,
) -> TrainState:
    """Drive the epoch loop; the callables do the actual work.

    train_step(epoch) and validate(epoch) return losses; snapshot() is
    called whenever validation improves and restore() exactly once at
    the end, so the caller always ends up with the best weights.
    """
    state = TrainState()
    for epoch in range(1, max_epochs + 1):
        train_loss = float(train_step(epoch))
        val_loss = float(validate(epoch))
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise TrainerError(
                f"loss became non-finite at epoch {epoch} "
                f"(train {train_loss}, val {val_loss})"
            )
        state.epoch = epoch
        improved = val_loss < state.best_val
        if improved:
            state.best_val = val_loss
            state.best_epoch = epoch
            state.since_improvement = 0
            snapshot()
        else:
            state.since_improvement += 1
        if on_epoch is not None:
            on_epoch(epoch, train_loss, val_loss, improved)
        if not improved and state.since_improvement >= patience:
            break
    restore()
    return state


def _forward_batched(model, images, batch_size):
    outputs = []
    with torch.no_grad():
        for start in range(0, images.shape[0], batch_size):
            outputs.append(model(images[start : start + batch_size]))
    return torch.cat(outputs) if outputs else torch.empty((0,))


def _write_predictions(model, manifest: RunManifest, ids):
    out_dir = Path(manifest.out_predictions)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not ids:
        print(
            f"warning: split {manifest.split!r} is empty, nothing to predict",
            file=sys.stderr,
        )
        return
    if len(ids) != len(set(ids)):
        raise TrainerError(f"duplicate ids in split {manifest.split!r}")
    model.eval()
    images = load_images(manifest.images_dir, ids)
    probs = _forward_batched(model, images, manifest.batch_size)
    for i, image_id in enumerate(ids):
        save_probability_png(out_dir / f"{image_id}.png", probs[i, 0].numpy())


def train(manifest: RunManifest) -> TrainState:
    torch.manual_seed(manifest.seed)
    split = load_split(manifest.split_file)
    train_ids = split["train"]
    val_ids = split["val"]
    if not train_ids:
        raise TrainerError("training split is empty")
    if not val_ids:
        raise TrainerError("validation split is empty, nothing to monitor")

    images = load_images(manifest.images_dir, train_ids)
    masks = load_masks(manifest.masks_dir, train_ids)
    val_images = load_images(manifest.images_dir, val_ids)
    val_masks = load_masks(manifest.masks_dir, val_ids)

    model = build_model()
    optimizer = torch.optim.Adam(model.parameters(), lr=LEARNING_RATE)
    shuffler = torch.Generator().manual_seed(manifest.seed)
    best = {}

    def train_step(epoch):
        model.train()
        order = torch.randperm(images.shape[0], generator=shuffler)
        losses = []
        for start in range(0, len(order), manifest.batch_size):
            batch = order[start : start + manifest.batch_size]
            optimizer.zero_grad()
            loss = combined_loss(model(images[batch]), masks[batch], beta=manifest.beta)
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        return sum(losses) / len(losses)

    def validate(epoch):
        model.eval()
        probs = _forward_batched(model, val_images, manifest.batch_size)
        return float(combined_loss(probs, val_masks, beta=manifest.beta))

    def snapshot():
        best.clear()
        best.update({k: v.detach().clone() for k, v in model.state_dict().items()})

    def restore():
        if best:
            model.load_state_dict(best)

    log_lines = [
        f"# adam, learning rate {LEARNING_RATE}, seed {manifest.seed}, beta {manifest.beta}",
        "epoch,train_loss,val_loss,improved",
    ]

    def on_epoch(epoch, train_loss, val_loss, improved):
        log_lines.append(
            f"{epoch},{train_loss:.6g},{val_loss:.6g},{'true' if improved else 'false'}"
        )

    state = run_epochs(
        manifest.epochs,
        manifest.patience,
        train_step,
        validate,
        snapshot,
        restore,
        on_epoch,
    )
    log_lines.append(f"# restored epoch {state.best_epoch} (val_loss {state.best_val:.6g})")

    weights_path = Path(manifest.out_weights)
    weights_path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), weights_path)
    Path(f"{weights_path}.log.csv").write_text("\n".join(log_lines) + "\n")

    _write_predictions(model, manifest, split_ids(split, manifest.split))
    return state


def predict(manifest: RunManifest):
    weights_path = Path(manifest.weights)
    if not weights_path.exists():
        raise TrainerError(f"no weights at {weights_path}")
    model = build_model()
    model.load_state_dict(torch.load(weights_path, map_location="cpu", weights_only=True))
    split = load_split(manifest.split_file)
    _write_predictions(model, manifest, split_ids(split, manifest.split))
