"""Trainer stand-in: predicts every mask perfectly."""
import json, shutil, sys
from pathlib import Path

from pcaharmony.experiment import read_manifest

manifest = read_manifest(sys.argv[1])
split = json.loads(Path(manifest.split_file).read_text())
ids = (
    split["train"] + split["val"] + split["test"]
    if manifest.split == "all"
    else split[manifest.split]
)
if manifest.mode == "train":
    Path(manifest.out_weights).write_text("demo weights\n")
out = Path(manifest.out_predictions)
out.mkdir(parents=True, exist_ok=True)
for image_id in ids:
    shutil.copy(Path(manifest.masks_dir) / f"{image_id}.png", out / f"{image_id}.png")
