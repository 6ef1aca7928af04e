"""Acceptance suite: the three headline guarantees, one PASS line each."""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import torch
from PIL import Image

from segtrainer import combined_loss, read_manifest, run_epochs, train

DATA = Path(__file__).parent / "data"


def report(capsys, name, failures, detail=""):
    status = "PASS" if not failures else "FAIL"
    line = f"[{status}] {name}"
    if detail:
        line += f"  ({detail})"
    with capsys.disabled():
        print(line, flush=True)
    assert not failures, f"{name}: " + "; ".join(failures)


def make_blob_dataset(root, n=20, side=32, seed=11):
    rng = np.random.default_rng(seed)
    (root / "images").mkdir(parents=True)
    (root / "masks").mkdir()
    yy, xx = np.mgrid[0:side, 0:side]
    ids = [f"blob{i:02d}" for i in range(n)]
    for image_id in ids:
        cy, cx = rng.integers(8, side - 8, size=2)
        disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= int(rng.integers(9, 30))
        frame = rng.uniform(0.1, 0.35, size=(side, side))
        frame[disc] = rng.uniform(0.65, 0.95)
        Image.fromarray((frame * 255).astype(np.uint8), mode="L").save(
            root / "images" / f"{image_id}.png"
        )
        Image.fromarray(disc.astype(np.uint8) * 255, mode="L").save(
            root / "masks" / f"{image_id}.png"
        )
    split = {"train": ids[:16], "val": ids[16:18], "test": ids[18:]}
    (root / "split.json").write_text(json.dumps(split))
    return ids, split


def write_manifest(path, **fields):
    path.write_text("".join(f"{k} = {v}\n" for k, v in fields.items()))
    return read_manifest(path)


@pytest.fixture(scope="module")
def overfit_run(tmp_path_factory):
    """Train once on trivially separable blobs; several tests share it."""
    root = tmp_path_factory.mktemp("blobs")
    ids, split = make_blob_dataset(root)
    manifest = write_manifest(
        root / "train.manifest",
        arm="original",
        mode="train",
        images_dir=root / "images",
        masks_dir=root / "masks",
        split_file=root / "split.json",
        split="train",
        epochs=100,
        batch_size=8,
        patience=10,
        beta=0.5,
        seed=3,
        out_weights=root / "out" / "blobs.weights",
        out_predictions=root / "out" / "train_predictions",
    )
    start = time.perf_counter()
    state = train(manifest)
    elapsed = time.perf_counter() - start
    return root, manifest, split, state, elapsed


def mean_dice(pred_dir, mask_dir, ids):
    values = []
    for image_id in ids:
        pred = np.asarray(Image.open(pred_dir / f"{image_id}.png")) >= 128
        mask = np.asarray(Image.open(mask_dir / f"{image_id}.png")) >= 128
        tp = np.count_nonzero(pred & mask)
        values.append(2 * tp / (pred.sum() + mask.sum()))
    return float(np.mean(values))


class TestAcceptance:
    def test_overfit_sanity(self, overfit_run, capsys):
        failures = []
        root, manifest, split, state, elapsed = overfit_run
        if elapsed >= 600:
            failures.append(f"training took {elapsed:.0f}s (budget 600s)")
        if state.epoch > 100:
            failures.append(f"ran {state.epoch} epochs, cap is 100")

        weights = Path(manifest.out_weights)
        if not weights.exists():
            failures.append("weights file missing")
        log_path = Path(f"{weights}.log.csv")
        if not log_path.exists():
            failures.append("per-epoch log missing")
        else:
            log = log_path.read_text().splitlines()
            if "learning rate 0.001" not in log[0]:
                failures.append("log does not record the learning rate")
            if log[1] != "epoch,train_loss,val_loss,improved":
                failures.append("log header wrong")
            if not log[-1].startswith("# restored epoch"):
                failures.append("log does not record the restoration")

        dice = mean_dice(root / "out" / "train_predictions", root / "masks", split["train"])
        if dice < 0.95:
            failures.append(f"training-set dice {dice:.4f} below 0.95")
        report(
            capsys,
            "overfit sanity",
            failures,
            f"dice {dice:.4f} after {state.epoch} epochs in {elapsed:.0f}s",
        )

    def test_loss_parity(self, capsys):
        failures = []
        cases = json.loads((DATA / "loss_vectors.json").read_text())["cases"]
        if len(cases) != 20:
            failures.append(f"expected 20 shared vectors, found {len(cases)}")
        worst = 0.0
        for i, case in enumerate(cases):
            shape = tuple(case["shape"])
            prob = torch.tensor([float(v) for v in case["prob"]], dtype=torch.float64)
            gt = torch.tensor(case["gt"], dtype=torch.float64)
            got = float(
                combined_loss(
                    prob.reshape(shape),
                    gt.reshape(shape),
                    beta=case["beta"],
                    smooth=case["smooth"],
                )
            )
            diff = abs(got - float(case["expected"]))
            worst = max(worst, diff)
            if diff > 1e-5:
                failures.append(f"vector {i}: loss differs by {diff:.2e}")
        report(
            capsys,
            "loss parity",
            failures,
            f"20 shared vectors, worst gap {worst:.2e} (tolerance 1e-5)",
        )

    def test_early_stopping_protocol(self, capsys):
        failures = []
        # validation improves for five epochs, then never again
        val_losses = [1.0, 0.9, 0.8, 0.7, 0.6] + [0.61] * 200
        snapshots = []
        restored_to = []
        state = run_epochs(
            max_epochs=100,
            patience=10,
            train_step=lambda epoch: 0.5,
            validate=lambda epoch: val_losses[epoch - 1],
            snapshot=lambda: snapshots.append(len(snapshots) + 1),
            restore=lambda: restored_to.append(snapshots[-1] if snapshots else None),
        )
        if state.epoch != 15:
            failures.append(f"halted at epoch {state.epoch}, want 5 + 10 = 15")
        if state.best_epoch != 5:
            failures.append(f"best epoch {state.best_epoch}, want 5")
        if state.since_improvement != 10:
            failures.append(f"{state.since_improvement} stale epochs at stop, want 10")
        if len(snapshots) != 5:
            failures.append(f"{len(snapshots)} snapshots taken, want 5")
        if restored_to != [5]:
            failures.append(f"restored {restored_to}, want the epoch-5 snapshot once")
        report(
            capsys,
            "early stopping",
            failures,
            f"stopped at epoch {state.epoch}, restored snapshot {restored_to}",
        )


class TestPredictionContract:
    def test_predict_reuses_weights_deterministically(self, overfit_run, tmp_path):
        root, train_manifest, split, _, _ = overfit_run
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        for out in (out_a, out_b):
            write_manifest(
                tmp_path / f"predict_{out.name}.manifest",
                arm="original",
                mode="predict",
                images_dir=root / "images",
                masks_dir=root / "masks",
                split_file=root / "split.json",
                split="all",
                epochs=100,
                batch_size=8,
                patience=10,
                beta=0.5,
                seed=3,
                weights=train_manifest.out_weights,
                out_predictions=out,
            )
            code = subprocess.run(
                [sys.executable, "-m", "segtrainer", str(tmp_path / f"predict_{out.name}.manifest")],
                capture_output=True,
                text=True,
            ).returncode
            assert code == 0
        names = sorted(p.name for p in out_a.glob("*.png"))
        assert len(names) == 20
        for name in names:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_empty_split_warns_and_leaves_empty_dir(self, overfit_run, tmp_path, capsys):
        root, train_manifest, _, _, _ = overfit_run
        split_file = tmp_path / "split.json"
        split_file.write_text(json.dumps({"train": [], "val": [], "test": []}))
        write_manifest(
            tmp_path / "empty.manifest",
            arm="original",
            mode="predict",
            images_dir=root / "images",
            masks_dir=root / "masks",
            split_file=split_file,
            split="test",
            epochs=100,
            batch_size=8,
            patience=10,
            beta=0.5,
            seed=3,
            weights=train_manifest.out_weights,
            out_predictions=tmp_path / "empty_out",
        )
        result = subprocess.run(
            [sys.executable, "-m", "segtrainer", str(tmp_path / "empty.manifest")],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "warning" in result.stderr
        assert (tmp_path / "empty_out").is_dir()
        assert not list((tmp_path / "empty_out").iterdir())

    def test_missing_weights_fail_cleanly(self, tmp_path):
        split_file = tmp_path / "split.json"
        split_file.write_text(json.dumps({"train": [], "val": [], "test": ["x"]}))
        write_manifest(
            tmp_path / "m.manifest",
            arm="pca",
            mode="predict",
            images_dir=tmp_path,
            masks_dir=tmp_path,
            split_file=split_file,
            split="test",
            epochs=100,
            batch_size=8,
            patience=10,
            beta=0.5,
            seed=1,
            weights=tmp_path / "nothing.weights",
            out_predictions=tmp_path / "out",
        )
        result = subprocess.run(
            [sys.executable, "-m", "segtrainer", str(tmp_path / "m.manifest")],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 1
        assert "no weights" in result.stderr
