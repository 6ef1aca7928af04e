"""Drive the whole pipeline on two synthetic datasets.

Generates two small image collections with masks, writes a pipeline
config, and runs ingest, harmonization, training, evaluation and
reporting in one call. The training command is a stub that copies each
image's mask into the prediction directory, so every recall comes out
1.0; swap in a real trainer command to reproduce actual numbers. The
stub doubles as a minimal example of the trainer contract: it is handed
one manifest path and must leave weights or predictions behind.
"""

import sys
from pathlib import Path

import numpy as np

from pcaharmony.experiment.pipeline import run_pipeline
from pcaharmony.images import save_image

OUT = Path("demo_out/full_pipeline")

STUB = '''\
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
    Path(manifest.out_weights).write_text("demo weights\\n")
out = Path(manifest.out_predictions)
out.mkdir(parents=True, exist_ok=True)
for image_id in ids:
    shutil.copy(Path(manifest.masks_dir) / f"{image_id}.png", out / f"{image_id}.png")
'''


def make_blob_dataset(root, n, seed):
    """Speckle frames with one bright lesion each, masks to match."""
    rng = np.random.default_rng(seed)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(exist_ok=True)
    yy, xx = np.mgrid[0:28, 0:28]
    for i in range(n):
        cy, cx = rng.integers(8, 20, size=2)
        blob = (yy - cy) ** 2 + (xx - cx) ** 2 <= int(rng.integers(6, 25))
        frame = rng.uniform(0.1, 0.35, size=(28, 28))
        frame[blob] = rng.uniform(0.6, 0.95)
        save_image(root / "images" / f"case{i:02d}.png", frame)
        save_image(root / "masks" / f"case{i:02d}.png", blob.astype(np.float64))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for seed, name in enumerate(("clinic_a", "clinic_b")):
        make_blob_dataset(OUT / name, n=30, seed=seed)

    stub = OUT / "stub_trainer.py"
    stub.write_text(STUB)
    config = OUT / "run.ini"
    config.write_text(
        "\n".join(
            [
                "[run]",
                "work_dir = work",
                f"trainer = {sys.executable} {stub}",
                "resize = 24x24",
                "epochs = 1",
                "",
                "[dataset:clinic_a]",
                "images = clinic_a/images",
                "masks = clinic_a/masks",
                "",
                "[dataset:clinic_b]",
                "images = clinic_b/images",
                "masks = clinic_b/masks",
                "",
            ]
        )
    )

    code = run_pipeline(config)
    assert code == 0
    work = OUT / "work"
    print("\nresults:")
    print((work / "results.csv").read_text())
    print((work / "reports" / "table2.md").read_text())
    print(f"artifacts under {work} (rerun this script: finished stages are skipped)")


if __name__ == "__main__":
    main()
