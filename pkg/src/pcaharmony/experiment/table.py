"""The 6x6 cross-dataset result grid and its derived statistics.

Rows of the grid name the dataset a model is evaluated on, columns the
dataset it was trained on, and each (row, column) exists once per arm:
models trained on original images and models trained on reconstructed
ones.  Everything downstream - per-column means, external recall
declines, the worst-k stratum, significance tests - is a pure function
of this grid.
"""

import math
from dataclasses import dataclass

from pcaharmony import stats

ARMS = ("original", "pca")

EMPHASIS_THRESHOLD = 0.05  # displayed |diff| at or above this gets marked


class IncompleteTableError(RuntimeError):
    """A requested aggregate needs cells that were never filled."""

    def __init__(self, missing):
        self.missing = list(missing)
        listing = ", ".join(f"({e}, {t}, {arm})" for e, t, arm in self.missing[:8])
        if len(self.missing) > 8:
            listing += f", ... {len(self.missing) - 8} more"
        super().__init__(f"table is missing {len(self.missing)} cells: {listing}")


def _check_fraction(name: str, value: float, allow_nan: bool):
    if math.isnan(value):
        if allow_nan:
            return
        raise ValueError(f"{name} must be a number")
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class PairResult:
    """One model evaluated on one dataset within one arm.

    dice and precision may be NaN when a result source carries recall
    only; recall is always required.
    """

    train_dataset: str
    eval_dataset: str
    arm: str
    recall: float
    dice: float = math.nan
    precision: float = math.nan

    def __post_init__(self):
        if self.arm not in ARMS:
            raise ValueError(f"unknown arm {self.arm!r}, expected one of {ARMS}")
        _check_fraction("recall", self.recall, allow_nan=False)
        _check_fraction("dice", self.dice, allow_nan=True)
        _check_fraction("precision", self.precision, allow_nan=True)


@dataclass(frozen=True)
class DeclineRecord:
    """Recall lost when a dataset is segmented by an out-of-domain model."""

    eval_dataset: str
    train_dataset: str
    decline: float


class ExperimentTable:
    def __init__(self, datasets):
        datasets = tuple(datasets)
        if len(datasets) < 2:
            raise ValueError("an experiment needs at least 2 datasets")
        if len(set(datasets)) != len(datasets):
            raise ValueError("dataset names must be unique")
        self.datasets = datasets
        self._cells: dict[tuple[str, str, str], PairResult] = {}

    def add(self, result: PairResult):
        for name in (result.eval_dataset, result.train_dataset):
            if name not in self.datasets:
                raise ValueError(f"unknown dataset {name!r}")
        key = (result.eval_dataset, result.train_dataset, result.arm)
        if key in self._cells:
            raise ValueError(f"cell {key} already filled")
        self._cells[key] = result

    def cell(self, eval_dataset: str, train_dataset: str, arm: str) -> PairResult:
        try:
            return self._cells[(eval_dataset, train_dataset, arm)]
        except KeyError:
            raise IncompleteTableError([(eval_dataset, train_dataset, arm)]) from None

    def recall(self, eval_dataset: str, train_dataset: str, arm: str) -> float:
        return self.cell(eval_dataset, train_dataset, arm).recall

    def external_pairs(self):
        """(eval, train) keys with train != eval, in row-major grid order."""
        return [
            (e, t) for e in self.datasets for t in self.datasets if e != t
        ]

    def missing_cells(self, arms=ARMS):
        missing = []
        for arm in arms:
            for e in self.datasets:
                for t in self.datasets:
                    if (e, t, arm) not in self._cells:
                        missing.append((e, t, arm))
        return missing

    def require_complete(self, arms=ARMS):
        missing = self.missing_cells(arms)
        if missing:
            raise IncompleteTableError(missing)

    def results(self):
        """All filled cells, arm-major then row-major, for serialization."""
        ordered = []
        for arm in ARMS:
            for e in self.datasets:
                for t in self.datasets:
                    cell = self._cells.get((e, t, arm))
                    if cell is not None:
                        ordered.append(cell)
        return ordered


def compute_declines(table: ExperimentTable, arm: str, diagonal: str = "row"):
    """Recall decline of every external pair in one arm.

    The default "row" form charges each external model against the
    native model of the dataset being evaluated: decline(e, t) =
    recall(e, e) - recall(e, t).  The "column" form instead compares a
    model's external recall with its own in-domain recall:
    recall(t, t) - recall(e, t).  Both forms share the same sum, but
    they rank pairs differently.
    """
    if arm not in ARMS:
        raise ValueError(f"unknown arm {arm!r}, expected one of {ARMS}")
    if diagonal not in ("row", "column"):
        raise ValueError(f"diagonal must be 'row' or 'column', got {diagonal!r}")
    table.require_complete(arms=(arm,))
    records = []
    for e, t in table.external_pairs():
        anchor = e if diagonal == "row" else t
        decline = table.recall(anchor, anchor, arm) - table.recall(e, t, arm)
        records.append(DeclineRecord(eval_dataset=e, train_dataset=t, decline=decline))
    return records


def worst_k(declines, k: int = 10):
    """The k (eval, train) keys with the largest decline.

    Ties are broken toward the lexicographically first (eval, train)
    key so the selection is deterministic.
    """
    declines = list(declines)
    if not 1 <= k <= len(declines):
        raise ValueError(f"k must lie in [1, {len(declines)}], got {k}")
    ranked = sorted(declines, key=lambda r: (-r.decline, r.eval_dataset, r.train_dataset))
    return [(r.eval_dataset, r.train_dataset) for r in ranked[:k]]


@dataclass(frozen=True)
class StratumRow:
    stratum: str
    metric: str
    original: stats.SampleSummary
    pca: stats.SampleSummary
    t: float | None
    df: float | None
    p: float | None
    degenerate: bool


def _stratum_row(table: ExperimentTable, stratum: str, metric: str, keys) -> StratumRow:
    ori = [getattr(table.cell(e, t, "original"), metric) for e, t in keys]
    pca = [getattr(table.cell(e, t, "pca"), metric) for e, t in keys]
    if len(keys) < 2:
        t = df = p = None
        degenerate = True
    else:
        try:
            result = stats.paired_t_test(ori, pca)
            t, df, p, degenerate = result.t, result.df, result.p, False
        except stats.DegenerateTestError:
            t = df = p = None
            degenerate = True
    return StratumRow(
        stratum=stratum,
        metric=metric,
        original=stats.summarize(ori),
        pca=stats.summarize(pca),
        t=t,
        df=df,
        p=p,
        degenerate=degenerate,
    )


def summarize_table3(table: ExperimentTable, k: int = 10):
    """Significance summary over all external pairs and the worst-k split.

    Strata are defined by the original arm's recall declines; k shrinks
    to the number of external pairs on small tables.  Metrics with
    incomplete data (any NaN cell) are skipped, so a recall-only table
    yields recall rows alone.
    """
    table.require_complete()
    all_keys = table.external_pairs()
    k = min(k, len(all_keys))
    worst_keys = worst_k(compute_declines(table, "original"), k)
    other_keys = [key for key in all_keys if key not in set(worst_keys)]
    strata = [
        ("all_pairs", all_keys),
        (f"worst_{k}", worst_keys),
    ]
    if other_keys:
        strata.append((f"other_{len(other_keys)}", other_keys))
    rows = []
    for metric in ("recall", "dice"):
        values = [
            getattr(table.cell(e, t, arm), metric)
            for e, t in all_keys
            for arm in ARMS
        ]
        if any(math.isnan(v) for v in values):
            continue
        for name, keys in strata:
            rows.append(_stratum_row(table, name, metric, keys))
    return rows


@dataclass(frozen=True)
class CellDisplay:
    original: float
    pca: float
    diff: float
    emphasized: bool


@dataclass(frozen=True)
class RenderedTable:
    datasets: tuple
    grid: tuple  # grid[eval_row][train_col] -> CellDisplay
    mean_original: tuple
    mean_pca: tuple
    mean_diff: tuple

    def to_csv(self) -> str:
        header = ["eval_dataset"]
        for ds in self.datasets:
            header += [f"{ds}_ori", f"{ds}_pca", f"{ds}_diff"]
        lines = [",".join(header)]
        for ds, row in zip(self.datasets, self.grid):
            cells = [ds]
            for cell in row:
                cells += [_fmt2(cell.original), _fmt2(cell.pca), _fmt2(cell.diff)]
            lines.append(",".join(cells))
        mean_cells = ["Mean"]
        for ori, pca, diff in zip(self.mean_original, self.mean_pca, self.mean_diff):
            mean_cells += [_fmt2(ori), _fmt2(pca), _fmt2(diff)]
        lines.append(",".join(mean_cells))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        header = ["Evaluated on"]
        for ds in self.datasets:
            header += [f"{ds} Ori", f"{ds} PCA", f"{ds} Diff"]
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "---|" * len(header),
        ]
        for ds, row in zip(self.datasets, self.grid):
            cells = [ds]
            for cell in row:
                diff = _fmt2(cell.diff)
                if cell.emphasized:
                    diff = f"**{diff}**"
                cells += [_fmt2(cell.original), _fmt2(cell.pca), diff]
            lines.append("| " + " | ".join(cells) + " |")
        mean_cells = ["**Mean**"]
        for ori, pca, diff in zip(self.mean_original, self.mean_pca, self.mean_diff):
            mean_cells += [_fmt2(ori), _fmt2(pca), _fmt2(diff)]
        lines.append("| " + " | ".join(mean_cells) + " |")
        return "\n".join(lines) + "\n"


def _fmt2(value: float) -> str:
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def render_table2(table: ExperimentTable) -> RenderedTable:
    """The result grid with per-column means and emphasis on big diffs.

    Emphasis follows the displayed two-decimal diff: a cell is marked
    when |diff| rounds to at least 0.05.
    """
    table.require_complete()
    grid = []
    for e in table.datasets:
        row = []
        for t in table.datasets:
            ori = table.recall(e, t, "original")
            pca = table.recall(e, t, "pca")
            diff = pca - ori
            displayed = float(_fmt2(diff))
            row.append(
                CellDisplay(
                    original=ori,
                    pca=pca,
                    diff=diff,
                    emphasized=abs(displayed) >= EMPHASIS_THRESHOLD - 1e-12,
                )
            )
        grid.append(tuple(row))
    n = len(table.datasets)
    mean_ori = []
    mean_pca = []
    for t in table.datasets:
        mean_ori.append(sum(table.recall(e, t, "original") for e in table.datasets) / n)
        mean_pca.append(sum(table.recall(e, t, "pca") for e in table.datasets) / n)
    mean_diff = [p - o for o, p in zip(mean_ori, mean_pca)]
    return RenderedTable(
        datasets=table.datasets,
        grid=tuple(grid),
        mean_original=tuple(mean_ori),
        mean_pca=tuple(mean_pca),
        mean_diff=tuple(mean_diff),
    )


def _fmt_opt(value, spec=".6g") -> str:
    if value is None:
        return ""
    return format(value, spec)


def table3_csv(rows) -> str:
    header = (
        "stratum,metric,n,original_mean,original_std,pca_mean,pca_std,t,df,p,degenerate"
    )
    lines = [header]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row.stratum,
                    row.metric,
                    str(row.original.n),
                    format(row.original.mean, ".6g"),
                    format(row.original.std, ".6g"),
                    format(row.pca.mean, ".6g"),
                    format(row.pca.std, ".6g"),
                    _fmt_opt(row.t),
                    _fmt_opt(row.df),
                    _fmt_opt(row.p),
                    "true" if row.degenerate else "false",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def declines_csv(table: ExperimentTable) -> str:
    """Both arms' external declines, ranked worst first within each arm."""
    lines = ["arm,rank,eval_dataset,train_dataset,decline"]
    for arm in ARMS:
        declines = compute_declines(table, arm)
        by_key = {(r.eval_dataset, r.train_dataset): r for r in declines}
        for rank, key in enumerate(worst_k(declines, k=len(declines)), start=1):
            record = by_key[key]
            lines.append(
                f"{arm},{rank},{record.eval_dataset},{record.train_dataset},"
                f"{format(record.decline, '.12g')}"
            )
    return "\n".join(lines) + "\n"
