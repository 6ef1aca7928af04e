"""End-to-end experiment driver: ingest, PCA, training, reports.

The pipeline is configured by one INI file with a [run] section and a
[dataset:Name] section per dataset, and works inside a single work
directory.  Each stage leaves completion markers so an interrupted run
resumes where it stopped, and every report is rendered with fixed
orderings and number formats so reruns are byte-identical.

Training happens out of process: the configured trainer command is
invoked once per manifest and only files cross the boundary.
"""

import configparser
import logging
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

from pcaharmony import pca
from pcaharmony.images import save_image, save_mask
from pcaharmony.ingest import (
    DatasetLayout,
    flatten,
    load_dataset,
    load_split,
    save_split,
    split_dataset,
)
from pcaharmony.experiment.collect import (
    EvalSource,
    collect_results,
    read_results_csv,
    write_results_csv,
)
from pcaharmony.experiment.manifest import write_manifest
from pcaharmony.experiment.plan import DatasetPaths, TrainerSettings, plan_experiment
from pcaharmony.experiment.table import (
    declines_csv,
    render_table2,
    summarize_table3,
    table3_csv,
)

log = logging.getLogger(__name__)

STAGES = ("ingest", "pca", "train", "evaluate", "report")


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    images_dir: Path
    masks_dir: Path


@dataclass(frozen=True)
class PipelineConfig:
    work_dir: Path
    datasets: tuple
    trainer: str = ""
    seed: int = 42
    resize: tuple = (256, 256)  # height, width
    external_eval: str = "all"
    fit_on: str = "all"
    selection: pca.SelectionPolicy = pca.SelectionPolicy()
    require_tumor: bool = False
    epochs: int = 100
    batch_size: int = 8
    patience: int = 10
    beta: float = 0.5


def parse_resize(text: str):
    """'256x256' -> (height, width); written WxH as in image tooling."""
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"resize must look like 256x256, got {text!r}")
    try:
        width, height = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"resize must look like 256x256, got {text!r}") from None
    if width < 1 or height < 1:
        raise ValueError(f"resize dimensions must be positive, got {text!r}")
    return height, width


def _parse_selection(run) -> pca.SelectionPolicy:
    criterion = run.get("selection", "kaiser")
    if criterion == "kaiser":
        return pca.SelectionPolicy(
            criterion="kaiser", threshold=float(run.get("kaiser_threshold", "1.0"))
        )
    if criterion == "variance":
        return pca.SelectionPolicy(
            criterion="variance", target=float(run.get("variance_target", "0.90"))
        )
    if criterion == "manual":
        if "manual_k" not in run:
            raise PipelineError("selection = manual needs manual_k in [run]")
        return pca.SelectionPolicy(criterion="manual", k=int(run["manual_k"]))
    raise PipelineError(f"unknown selection criterion {criterion!r}")


def load_config(path) -> PipelineConfig:
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise PipelineError(f"cannot read config file {path}")
    if "run" not in parser:
        raise PipelineError(f"{path}: missing [run] section")
    run = parser["run"]
    base = path.parent

    def _resolve(value: str) -> Path:
        # always absolute: downstream mask templates rely on absolute
        # joins, and the work dir must not move with the process cwd
        p = Path(value)
        return p.resolve() if p.is_absolute() else (base / p).resolve()

    datasets = []
    for section in parser.sections():
        if not section.startswith("dataset:"):
            continue
        name = section.split(":", 1)[1].strip()
        if not name:
            raise PipelineError(f"{path}: empty dataset name in [{section}]")
        block = parser[section]
        for key in ("images", "masks"):
            if key not in block:
                raise PipelineError(f"{path}: [{section}] needs {key}")
        datasets.append(
            DatasetConfig(
                name=name,
                images_dir=_resolve(block["images"]),
                masks_dir=_resolve(block["masks"]),
            )
        )
    names = [ds.name for ds in datasets]
    if len(set(names)) != len(names):
        raise PipelineError(f"{path}: duplicate dataset names {names}")
    if "work_dir" not in run:
        raise PipelineError(f"{path}: [run] needs work_dir")
    external_eval = run.get("external_eval", "all")
    if external_eval not in ("all", "test"):
        raise PipelineError(f"{path}: external_eval must be 'all' or 'test'")
    fit_on = run.get("fit_on", "all")
    if fit_on not in ("all", "train"):
        raise PipelineError(f"{path}: fit_on must be 'all' or 'train'")
    return PipelineConfig(
        work_dir=_resolve(run["work_dir"]),
        datasets=tuple(datasets),
        trainer=run.get("trainer", ""),
        seed=run.getint("seed", 42),
        resize=parse_resize(run.get("resize", "256x256")),
        external_eval=external_eval,
        fit_on=fit_on,
        selection=_parse_selection(run),
        require_tumor=run.getboolean("require_tumor", False),
        epochs=run.getint("epochs", 100),
        batch_size=run.getint("batch_size", 8),
        patience=run.getint("patience", 10),
        beta=run.getfloat("beta", 0.5),
    )


# work directory layout helpers

def _dataset_dir(config, name) -> Path:
    return config.work_dir / "datasets" / name


def _marker(config, name) -> Path:
    return config.work_dir / "markers" / f"{name}.done"


def _done(config, name) -> bool:
    return _marker(config, name).exists()


def _mark(config, name):
    marker = _marker(config, name)
    marker.parent.mkdir(parents=True, exist_ok=True)
    marker.write_text("done\n")


def _require_datasets(config):
    if not config.datasets:
        raise PipelineError("config defines no [dataset:...] sections")


def stage_ingest(config: PipelineConfig):
    _require_datasets(config)
    height, width = config.resize
    for ds in config.datasets:
        if _done(config, f"ingest__{ds.name}"):
            continue
        log.info("ingest: %s", ds.name)
        layout = DatasetLayout(
            image_glob="*.png", mask_template=str(ds.masks_dir / "{stem}.png")
        )
        records = load_dataset(
            ds.images_dir,
            layout=layout,
            resize=(height, width),
            require_tumor=config.require_tumor,
        )
        if not records:
            raise PipelineError(f"dataset {ds.name}: no usable images under {ds.images_dir}")
        out = _dataset_dir(config, ds.name)
        (out / "images_original").mkdir(parents=True, exist_ok=True)
        (out / "masks").mkdir(parents=True, exist_ok=True)
        for record in records:
            save_image(out / "images_original" / f"{record.id}.png", record.image)
            save_mask(out / "masks" / f"{record.id}.png", record.mask)
        assignment = split_dataset(records, seed=config.seed)
        save_split(out / "split.json", assignment)
        _mark(config, f"ingest__{ds.name}")


def stage_pca(config: PipelineConfig):
    _require_datasets(config)
    reports = config.work_dir / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    for ds in config.datasets:
        if _done(config, f"pca__{ds.name}"):
            continue
        log.info("pca: %s", ds.name)
        out = _dataset_dir(config, ds.name)
        layout = DatasetLayout(
            image_glob="images_original/*.png", mask_template=str(out / "masks" / "{stem}.png")
        )
        records = load_dataset(out, layout=layout)
        if not records:
            raise PipelineError(f"dataset {ds.name}: ingest stage has not run")
        matrix = flatten(records)
        fit_rows = None
        if config.fit_on == "train":
            train_ids = set(load_split(out / "split.json").train)
            fit_rows = [i for i, rid in enumerate(matrix.row_ids) if rid in train_ids]
        model = pca.fit_pca(matrix.data, fit_rows=fit_rows)
        selection = pca.select_components(model.eigenvalues, config.selection)
        reconstructed = pca.reconstruct(model, selection.k, clip=True)
        (out / "images_pca").mkdir(parents=True, exist_ok=True)
        height, width = records[0].image.shape
        for record, row in zip(records, reconstructed):
            save_image(out / "images_pca" / f"{record.id}.png", row.reshape(height, width))
        pca.write_scree_csv(reports / f"scree_{ds.name}.csv", model.eigenvalues)
        _mark(config, f"pca__{ds.name}")


def _planned_runs(config: PipelineConfig):
    _require_datasets(config)
    dataset_paths = []
    for ds in config.datasets:
        out = _dataset_dir(config, ds.name)
        dataset_paths.append(
            DatasetPaths(
                name=ds.name,
                images={
                    "original": str(out / "images_original"),
                    "pca": str(out / "images_pca"),
                },
                masks_dir=str(out / "masks"),
                split_file=str(out / "split.json"),
            )
        )
    settings = TrainerSettings(
        epochs=config.epochs,
        batch_size=config.batch_size,
        patience=config.patience,
        beta=config.beta,
        seed=config.seed,
        external_eval=config.external_eval,
    )
    return plan_experiment(dataset_paths, config.work_dir, settings)


def stage_train(config: PipelineConfig):
    if not config.trainer:
        raise PipelineError("[run] trainer is not set; pass --results-from to skip training")
    runs = _planned_runs(config)
    manifest_dir = config.work_dir / "manifests"
    manifest_dir.mkdir(parents=True, exist_ok=True)
    command = shlex.split(config.trainer)
    for run in runs:
        manifest_path = manifest_dir / f"{run.name}.manifest"
        if not manifest_path.exists():
            write_manifest(manifest_path, run.manifest)
        if _done(config, f"run__{run.name}"):
            continue
        log.info("trainer: %s", run.name)
        Path(run.manifest.out_predictions).mkdir(parents=True, exist_ok=True)
        if run.manifest.out_weights:
            Path(run.manifest.out_weights).parent.mkdir(parents=True, exist_ok=True)
        result = subprocess.run(
            command + [str(manifest_path)], capture_output=True, text=True
        )
        if result.returncode != 0:
            tail = result.stderr.strip().splitlines()[-5:]
            raise PipelineError(
                f"trainer failed for {run.name} (exit {result.returncode}): "
                + " / ".join(tail)
            )
        _mark(config, f"run__{run.name}")


def stage_evaluate(config: PipelineConfig):
    if _done(config, "evaluate"):
        return
    _require_datasets(config)
    log.info("evaluate: scoring predictions")
    sources = {
        ds.name: EvalSource(
            masks_dir=_dataset_dir(config, ds.name) / "masks",
            split_file=_dataset_dir(config, ds.name) / "split.json",
        )
        for ds in config.datasets
    }
    table = collect_results(
        [ds.name for ds in config.datasets],
        sources,
        config.work_dir / "predictions",
        external_eval=config.external_eval,
    )
    write_results_csv(config.work_dir / "results.csv", table)
    _mark(config, "evaluate")


def stage_report(config: PipelineConfig, results_from=None):
    if results_from is not None:
        results_path = Path(results_from) / "results.csv"
    else:
        results_path = config.work_dir / "results.csv"
    if not results_path.exists():
        raise PipelineError(f"no results at {results_path}; run the evaluate stage first")
    log.info("report: %s", results_path)
    table = read_results_csv(results_path)
    if config.datasets:
        expected = {ds.name for ds in config.datasets}
        if set(table.datasets) != expected:
            raise PipelineError(
                f"results datasets {sorted(table.datasets)} do not match "
                f"config datasets {sorted(expected)}"
            )
    reports = config.work_dir / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    rendered = render_table2(table)
    (reports / "table2.csv").write_text(rendered.to_csv())
    (reports / "table2.md").write_text(rendered.to_markdown())
    (reports / "table3.csv").write_text(table3_csv(summarize_table3(table)))
    (reports / "declines.csv").write_text(declines_csv(table))


def run_pipeline(config_path, results_from=None, stage=None) -> int:
    """Run the experiment stages in order; returns 0 on success."""
    config = load_config(config_path)
    if stage is not None and stage not in STAGES:
        raise PipelineError(f"unknown stage {stage!r}, expected one of {STAGES}")
    if results_from is not None:
        stages = (stage,) if stage else ("report",)
        if any(s not in ("report",) for s in stages):
            raise PipelineError("--results-from only makes sense for the report stage")
    else:
        stages = (stage,) if stage else STAGES
    for name in stages:
        if name == "ingest":
            stage_ingest(config)
        elif name == "pca":
            stage_pca(config)
        elif name == "train":
            stage_train(config)
        elif name == "evaluate":
            stage_evaluate(config)
        elif name == "report":
            stage_report(config, results_from=results_from)
    return 0
