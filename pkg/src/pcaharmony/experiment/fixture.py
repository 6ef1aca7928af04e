"""Reference recall grid for the six-dataset benchmark.

Recall of twelve U-Net models (six per arm) evaluated across six public
breast-ultrasound datasets, recorded at two decimals.  Rows name the
dataset a model is evaluated on, columns the dataset it was trained on.
The grid drives the regression tests for decline analysis and report
rendering, and feeds the report pipeline's no-training path.  Dice and
precision were not recorded per cell, so cells carry recall only.
"""

import math

from pcaharmony.experiment.collect import write_results_csv
from pcaharmony.experiment.table import ExperimentTable, PairResult

REFERENCE_DATASETS = ("Ardakani", "BrEaST", "BUS_UC", "BUSBRA", "BUSI", "BUSI_WHU")

# eval dataset -> recall per training dataset, in REFERENCE_DATASETS order
_ORIGINAL_ROWS = {
    "Ardakani": (0.82, 0.50, 0.75, 0.77, 0.66, 0.74),
    "BrEaST": (0.76, 0.71, 0.69, 0.70, 0.57, 0.73),
    "BUS_UC": (0.88, 0.65, 0.88, 0.88, 0.74, 0.88),
    "BUSBRA": (0.63, 0.48, 0.61, 0.85, 0.54, 0.71),
    "BUSI": (0.67, 0.50, 0.63, 0.67, 0.69, 0.66),
    "BUSI_WHU": (0.71, 0.58, 0.67, 0.77, 0.61, 0.83),
}
_PCA_ROWS = {
    "Ardakani": (0.84, 0.73, 0.77, 0.76, 0.67, 0.76),
    "BrEaST": (0.70, 0.73, 0.71, 0.72, 0.59, 0.70),
    "BUS_UC": (0.87, 0.77, 0.91, 0.90, 0.80, 0.88),
    "BUSBRA": (0.65, 0.66, 0.68, 0.80, 0.64, 0.74),
    "BUSI": (0.67, 0.65, 0.68, 0.68, 0.68, 0.67),
    "BUSI_WHU": (0.70, 0.78, 0.73, 0.81, 0.67, 0.82),
}


def _flatten(rows):
    return {
        (eval_ds, train_ds): value
        for eval_ds, row in rows.items()
        for train_ds, value in zip(REFERENCE_DATASETS, row)
    }


ORIGINAL_RECALL = _flatten(_ORIGINAL_ROWS)
PCA_RECALL = _flatten(_PCA_ROWS)

# the Mean row as originally published, kept only as a cross-check target;
# those means were computed before rounding, so they can differ from the
# two-decimal grid's column means by up to one display step
PUBLISHED_MEAN_ROW = {
    "original": (0.74, 0.57, 0.70, 0.77, 0.63, 0.75),
    "pca": (0.73, 0.72, 0.75, 0.78, 0.68, 0.76),
    "diff": (-0.01, 0.15, 0.05, 0.01, 0.05, 0.01),
}


def reference_table() -> ExperimentTable:
    """The reference grid as a fully populated two-arm table."""
    table = ExperimentTable(REFERENCE_DATASETS)
    for (eval_ds, train_ds), value in ORIGINAL_RECALL.items():
        table.add(
            PairResult(
                train_dataset=train_ds,
                eval_dataset=eval_ds,
                arm="original",
                recall=value,
                dice=math.nan,
                precision=math.nan,
            )
        )
    for (eval_ds, train_ds), value in PCA_RECALL.items():
        table.add(
            PairResult(
                train_dataset=train_ds,
                eval_dataset=eval_ds,
                arm="pca",
                recall=value,
                dice=math.nan,
                precision=math.nan,
            )
        )
    return table


def write_reference_results_csv(path):
    """Write the grid in the results format the report pipeline reads."""
    write_results_csv(path, reference_table())
