"""Score toy segmentations and watch the training loss react.

Shows the confusion-count metrics on masks of known overlap, the
degenerate-image convention, and how the combined loss moves as a
prediction drifts away from its target.
"""

import numpy as np

from pcaharmony import metrics


def main():
    side = 16
    yy, xx = np.mgrid[0:side, 0:side]
    gt = ((yy - 8) ** 2 + (xx - 8) ** 2 <= 25).astype(np.uint8)

    print("prediction        recall  precision  dice")
    for label, shift in (("exact", 0), ("one off", 1), ("three off", 3), ("six off", 6)):
        pred = np.roll(gt, shift, axis=1)
        score = metrics.score_pair(pred, gt)
        print(f"{label:<16}  {score.recall:.3f}   {score.precision:.3f}      {score.dice:.3f}")

    # an empty ground truth cannot be recalled from; such images are
    # flagged and skipped by dataset aggregation
    empty = np.zeros_like(gt)
    flagged = metrics.score_pair(empty, empty)
    print(f"\nempty ground truth -> degenerate={flagged.degenerate}, dice={flagged.dice}")

    scores = [metrics.score_pair(np.roll(gt, s, axis=1), gt) for s in (0, 1, 2)]
    scores.append(flagged)
    summary = metrics.dataset_scores(scores)
    print(
        f"dataset of {len(scores)}: {summary.n_scored} scored, "
        f"{summary.n_degenerate} degenerate, mean dice {summary.dice:.3f}"
    )

    print("\nblur   combined loss")
    rng = np.random.default_rng(5)
    for blur in (0.0, 0.1, 0.3, 0.5):
        prob = np.clip(gt * (1 - blur) + blur * rng.random(gt.shape), 0.0, 1.0)
        loss = metrics.combined_loss(prob, gt)
        print(f"{blur:.1f}    {loss:.4f}")


if __name__ == "__main__":
    main()
