"""Turn directories of prediction PNGs into a filled experiment table."""

import math
from dataclasses import dataclass
from pathlib import Path

from pcaharmony import metrics
from pcaharmony.images import load_image, load_mask
from pcaharmony.ingest import load_split
from pcaharmony.experiment.table import ARMS, ExperimentTable, IncompleteTableError, PairResult

RESULTS_HEADER = "arm,eval_dataset,train_dataset,recall,dice,precision"


@dataclass(frozen=True)
class EvalSource:
    """Where a dataset's ground truth lives."""

    masks_dir: Path
    split_file: Path


def prediction_dir(pred_root, arm: str, eval_dataset: str, train_dataset: str) -> Path:
    return Path(pred_root) / arm / f"{eval_dataset}__{train_dataset}"


def _score_cell(pred_dir: Path, masks_dir: Path, ids, eval_ds, train_ds, arm) -> PairResult:
    expected = set(ids)
    found = {p.stem for p in pred_dir.glob("*.png")}
    if found != expected:
        missing = sorted(expected - found)[:5]
        extra = sorted(found - expected)[:5]
        raise ValueError(
            f"prediction ids under {pred_dir} do not match the evaluation set "
            f"for ({eval_ds}, {train_ds}, {arm}): missing {missing}, unexpected {extra}"
        )
    scores = []
    for record_id in sorted(expected):
        prob = load_image(pred_dir / f"{record_id}.png")
        gt = load_mask(Path(masks_dir) / f"{record_id}.png")
        scores.append(metrics.score_pair(metrics.binarize(prob), gt, id=record_id))
    agg = metrics.dataset_scores(scores)
    return PairResult(
        train_dataset=train_ds,
        eval_dataset=eval_ds,
        arm=arm,
        recall=agg.recall,
        dice=agg.dice,
        precision=agg.precision,
    )


def collect_results(
    datasets,
    sources: dict,
    pred_root,
    external_eval: str = "all",
    arms=ARMS,
) -> ExperimentTable:
    """Score every (eval, train, arm) prediction directory.

    Diagonal cells are scored on the evaluation dataset's held-out test
    split; external cells on its full image set, or on the test split
    when external_eval="test".  Raises IncompleteTableError when any
    planned prediction directory is absent, and ValueError when a
    directory's ids disagree with the evaluation set.
    """
    if external_eval not in ("all", "test"):
        raise ValueError(f"external_eval must be 'all' or 'test', got {external_eval!r}")
    table = ExperimentTable(datasets)
    splits = {name: load_split(src.split_file) for name, src in sources.items()}
    missing = []
    cells = []
    for arm in arms:
        for eval_ds in datasets:
            split = splits[eval_ds]
            for train_ds in datasets:
                pred = prediction_dir(pred_root, arm, eval_ds, train_ds)
                if not pred.is_dir():
                    missing.append((eval_ds, train_ds, arm))
                    continue
                if eval_ds == train_ds or external_eval == "test":
                    ids = split.test
                else:
                    ids = split.train + split.val + split.test
                cells.append((pred, eval_ds, train_ds, arm, ids))
    if missing:
        raise IncompleteTableError(missing)
    for pred, eval_ds, train_ds, arm, ids in cells:
        table.add(_score_cell(pred, sources[eval_ds].masks_dir, ids, eval_ds, train_ds, arm))
    return table


def _fmt_metric(value: float) -> str:
    if math.isnan(value):
        return ""
    return repr(float(value))


def write_results_csv(path, table: ExperimentTable):
    """One row per filled cell, arm-major then grid order; NaN as empty."""
    lines = [RESULTS_HEADER]
    for cell in table.results():
        lines.append(
            ",".join(
                [
                    cell.arm,
                    cell.eval_dataset,
                    cell.train_dataset,
                    _fmt_metric(cell.recall),
                    _fmt_metric(cell.dice),
                    _fmt_metric(cell.precision),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_metric(text: str) -> float:
    if text == "":
        return math.nan
    return float(text)


def read_results_csv(path, datasets=None) -> ExperimentTable:
    """Read results rows back; dataset order follows first appearance."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != RESULTS_HEADER:
        raise ValueError(f"{path} is not a results file (expected header {RESULTS_HEADER!r})")
    rows = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"{path}:{number}: expected 6 columns, got {len(parts)}")
        rows.append(parts)
    if datasets is None:
        seen = []
        for arm, eval_ds, train_ds, *_ in rows:
            if eval_ds not in seen:
                seen.append(eval_ds)
        datasets = seen
    table = ExperimentTable(datasets)
    for arm, eval_ds, train_ds, recall, dice, precision in rows:
        table.add(
            PairResult(
                train_dataset=train_ds,
                eval_dataset=eval_ds,
                arm=arm,
                recall=_parse_metric(recall),
                dice=_parse_metric(dice),
                precision=_parse_metric(precision),
            )
        )
    return table
