import math

import pytest

from segtrainer import TrainerError, run_epochs


class Recorder:
    """Fake training callbacks driven by a scripted validation curve."""

    def __init__(self, val_losses):
        self.val_losses = list(val_losses)
        self.snapshots = []
        self.restored = 0
        self.log = []

    def train_step(self, epoch):
        return 1.0 / epoch

    def validate(self, epoch):
        return self.val_losses[epoch - 1]

    def snapshot(self):
        self.snapshots.append(len(self.log) + 1)

    def restore(self):
        self.restored += 1

    def on_epoch(self, epoch, train_loss, val_loss, improved):
        self.log.append((epoch, val_loss, improved))

    def run(self, max_epochs=100, patience=10):
        return run_epochs(
            max_epochs,
            patience,
            self.train_step,
            self.validate,
            self.snapshot,
            self.restore,
            self.on_epoch,
        )


class TestEpochLoop:
    def test_runs_to_cap_when_always_improving(self):
        rec = Recorder([1.0 / (i + 1) for i in range(100)])
        state = rec.run(max_epochs=20)
        assert state.epoch == 20
        assert state.best_epoch == 20
        assert len(rec.snapshots) == 20
        assert rec.restored == 1

    def test_equal_loss_is_not_an_improvement(self):
        rec = Recorder([1.0, 0.5] + [0.5] * 50)
        state = rec.run(patience=3)
        assert state.best_epoch == 2
        assert state.epoch == 5  # 2 good epochs + 3 flat ones

    def test_recovery_resets_the_counter(self):
        # dips just before patience would fire, then flattens for good
        rec = Recorder([1.0, 0.9, 0.95, 0.95, 0.8] + [0.9] * 50)
        state = rec.run(patience=3)
        assert state.best_epoch == 5
        assert state.epoch == 8
        assert state.best_val == 0.8

    def test_non_finite_loss_aborts_with_epoch(self):
        rec = Recorder([1.0, 0.5, math.nan, 0.4])
        with pytest.raises(TrainerError, match="epoch 3"):
            rec.run()

    def test_best_epoch_has_minimum_logged_val_loss(self):
        rec = Recorder([0.9, 0.7, 0.8, 0.6, 0.65] + [0.7] * 30)
        state = rec.run(patience=5)
        logged = {epoch: val for epoch, val, _ in rec.log}
        assert logged[state.best_epoch] == min(logged.values())
