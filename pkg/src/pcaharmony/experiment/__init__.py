"""Cross-dataset generalization experiment: planning, collection, reports."""

from pcaharmony.experiment.collect import (
    EvalSource,
    IncompleteTableError,
    collect_results,
    read_results_csv,
    write_results_csv,
)
from pcaharmony.experiment.fixture import (
    ORIGINAL_RECALL,
    PCA_RECALL,
    REFERENCE_DATASETS,
    reference_table,
    write_reference_results_csv,
)
from pcaharmony.experiment.manifest import RunManifest, read_manifest, write_manifest
from pcaharmony.experiment.plan import DatasetPaths, PlannedRun, plan_experiment
from pcaharmony.experiment.table import (
    ARMS,
    DeclineRecord,
    ExperimentTable,
    PairResult,
    RenderedTable,
    StratumRow,
    compute_declines,
    declines_csv,
    render_table2,
    summarize_table3,
    table3_csv,
    worst_k,
)

__all__ = [
    "ARMS",
    "DatasetPaths",
    "DeclineRecord",
    "EvalSource",
    "ExperimentTable",
    "IncompleteTableError",
    "ORIGINAL_RECALL",
    "PCA_RECALL",
    "PairResult",
    "PlannedRun",
    "REFERENCE_DATASETS",
    "RenderedTable",
    "RunManifest",
    "StratumRow",
    "collect_results",
    "compute_declines",
    "declines_csv",
    "plan_experiment",
    "read_manifest",
    "read_results_csv",
    "reference_table",
    "render_table2",
    "summarize_table3",
    "table3_csv",
    "worst_k",
    "write_manifest",
    "write_reference_results_csv",
    "write_results_csv",
]
