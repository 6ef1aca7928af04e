"""Command line entry points.

Subcommands mirror the library layers: `ingest` turns a PNG directory
into a matrix file plus split, `pca fit/reconstruct/scree` handle the
harmonization models, `evaluate` scores prediction directories,
`ttest` compares two score samples, and `run` drives the full
experiment pipeline from a config file.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from pcaharmony import metrics, pca, stats
from pcaharmony.images import IngestError, load_image, load_mask, save_image
from pcaharmony.ingest import (
    DEFAULT_SEED,
    DatasetLayout,
    DataMatrix,
    flatten,
    load_dataset,
    load_split,
    save_split,
    split_dataset,
)
from pcaharmony.umx import load_matrix, save_matrix
from pcaharmony.experiment.pipeline import PipelineError, parse_resize, run_pipeline


def _cmd_ingest(args) -> int:
    resize = parse_resize(args.resize) if args.resize else None
    layout = DatasetLayout(
        image_glob=args.pattern,
        mask_template=None if args.no_masks else args.mask_pattern,
    )
    records = load_dataset(
        args.dir, layout=layout, resize=resize, require_tumor=args.require_tumor
    )
    if not records:
        print(f"no images matched {args.pattern} under {args.dir}", file=sys.stderr)
        return 1
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    matrix = flatten(records)
    save_matrix(f"{prefix}.umx", matrix)
    print(f"wrote {prefix}.umx ({matrix.rows} rows x {matrix.cols} columns)")
    if records[0].mask is not None:
        masks = flatten(records, field="mask")
        save_matrix(f"{prefix}_masks.umx", masks)
        print(f"wrote {prefix}_masks.umx")
    assignment = split_dataset(records, seed=args.seed)
    save_split(f"{prefix}_split.json", assignment)
    counts = assignment.counts
    print(
        f"wrote {prefix}_split.json "
        f"(train {counts[0]} / val {counts[1]} / test {counts[2]}, seed {args.seed})"
    )
    return 0


def _cmd_pca_fit(args) -> int:
    matrix = load_matrix(args.infile)
    fit_rows = None
    if args.fit_on == "train":
        if not args.split:
            print("--fit-on train needs --split <split.json>", file=sys.stderr)
            return 1
        train_ids = set(load_split(args.split).train)
        fit_rows = [i for i, rid in enumerate(matrix.row_ids) if rid in train_ids]
        if not fit_rows:
            print("no matrix rows belong to the split's training ids", file=sys.stderr)
            return 1
    model = pca.fit_pca(matrix.data, fit_rows=fit_rows)
    pca.save_model(args.out, model)
    print(
        f"wrote {args.out} (n={model.n_samples}, d={model.d}, k_max={model.k_max}, "
        f"fit on {len(fit_rows) if fit_rows is not None else matrix.rows} rows)"
    )
    return 0


def _resolve_k(model: pca.PcaModel, text: str) -> int:
    if text == "auto":
        return pca.kaiser_guttman(model.eigenvalues)
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"--k must be 'auto' or an integer, got {text!r}") from None


def _cmd_pca_reconstruct(args) -> int:
    model = pca.load_model(args.model)
    k = _resolve_k(model, args.k)
    out = Path(args.out)
    if args.ids:
        row_ids = Path(args.ids).read_text().splitlines()
        if len(row_ids) != model.n_samples:
            print(
                f"{args.ids} has {len(row_ids)} ids but the model carries "
                f"{model.n_samples} samples",
                file=sys.stderr,
            )
            return 1
    else:
        width = len(str(max(model.n_samples - 1, 1)))
        row_ids = [f"row{i:0{width}d}" for i in range(model.n_samples)]
    if out.suffix == ".umx":
        rows = pca.reconstruct(model, k)
        out.parent.mkdir(parents=True, exist_ok=True)
        save_matrix(out, DataMatrix(data=rows, row_ids=tuple(row_ids)))
        print(f"wrote {out} with k={k}")
        return 0
    if args.size:
        height, width_px = parse_resize(args.size)
    else:
        side = math.isqrt(model.d)
        if side * side != model.d:
            print(
                f"model dimension {model.d} is not square; pass --size WxH",
                file=sys.stderr,
            )
            return 1
        height = width_px = side
    if height * width_px != model.d:
        print(
            f"--size {args.size} does not match model dimension {model.d}",
            file=sys.stderr,
        )
        return 1
    rows = pca.reconstruct(model, k, clip=True)
    out.mkdir(parents=True, exist_ok=True)
    for row_id, row in zip(row_ids, rows):
        save_image(out / f"{row_id}.png", row.reshape(height, width_px))
    print(f"wrote {model.n_samples} images under {out} with k={k}")
    return 0


def _cmd_pca_scree(args) -> int:
    model = pca.load_model(args.model)
    pca.write_scree_csv(args.out, model.eigenvalues)
    selected = pca.kaiser_guttman(model.eigenvalues)
    print(f"wrote {args.out} ({model.k_max} components, kaiser keeps {selected})")
    return 0


def _cmd_evaluate(args) -> int:
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    ids = sorted(p.stem for p in pred_dir.glob("*.png"))
    if not ids:
        print(f"no prediction PNGs under {pred_dir}", file=sys.stderr)
        return 1
    scores = []
    for record_id in ids:
        gt_path = gt_dir / f"{record_id}.png"
        if not gt_path.exists():
            print(f"no ground truth for prediction id {record_id!r}", file=sys.stderr)
            return 1
        prob = load_image(pred_dir / f"{record_id}.png")
        pred = metrics.binarize(prob, args.threshold)
        scores.append(metrics.score_pair(pred, load_mask(gt_path), id=record_id))
    lines = ["id,recall,precision,dice,degenerate"]
    for s in scores:
        lines.append(
            f"{s.id},{s.recall!r},{s.precision!r},{s.dice!r},"
            f"{'true' if s.degenerate else 'false'}"
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    agg = metrics.dataset_scores(scores)
    print(f"wrote {out} ({len(scores)} images, {agg.n_degenerate} degenerate)")
    print(
        f"recall {agg.recall:.4f}  precision {agg.precision:.4f}  dice {agg.dice:.4f}"
        f"  (means over {agg.n_scored} non-degenerate images)"
    )
    return 0


def _read_sample(path, metric: str):
    """A per-image score CSV yields (ids, values); a plain list yields values."""
    lines = Path(path).read_text().splitlines()
    rows = [line for line in lines if line.strip() and not line.startswith("#")]
    if not rows:
        raise ValueError(f"{path} contains no values")
    header = rows[0].split(",")
    if header[0] == "id":
        if metric not in header:
            raise ValueError(f"{path} has no column {metric!r}")
        column = header.index(metric)
        ids, values = [], []
        for row in rows[1:]:
            parts = row.split(",")
            ids.append(parts[0])
            values.append(float(parts[column]))
        return ids, values
    return None, [float(row.split(",")[0]) for row in rows]


def _cmd_ttest(args) -> int:
    ids_a, a = _read_sample(args.a, args.metric)
    ids_b, b = _read_sample(args.b, args.metric)
    if args.paired:
        if ids_a is not None and ids_b is not None:
            common = sorted(set(ids_a) & set(ids_b))
            if not common:
                print("the two files share no ids to pair", file=sys.stderr)
                return 1
            lookup_a = dict(zip(ids_a, a))
            lookup_b = dict(zip(ids_b, b))
            a = [lookup_a[i] for i in common]
            b = [lookup_b[i] for i in common]
        result = stats.paired_t_test(a, b)
        print(f"paired t-test on {len(a)} pairs")
    else:
        result = stats.welch_t_test(a, b)
        print(f"two-sample t-test on {len(a)} vs {len(b)} values")
    print(f"t = {result.t:.6g}")
    print(f"df = {result.df:.6g}")
    print(f"p = {result.p:.6g}")
    return 0


def _cmd_run(args) -> int:
    return run_pipeline(args.config, results_from=args.results_from, stage=args.stage)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcaharmony",
        description="PCA dataset harmonization and segmentation evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="load a PNG dataset into a matrix file")
    ingest.add_argument("--dir", required=True, help="dataset root directory")
    ingest.add_argument("--pattern", default="images/*.png", help="image glob under --dir")
    ingest.add_argument(
        "--mask-pattern",
        default="masks/{stem}.png",
        help="mask path template with {stem}",
    )
    ingest.add_argument("--no-masks", action="store_true", help="images carry no masks")
    ingest.add_argument("--out", required=True, help="output prefix")
    ingest.add_argument("--resize", default=None, help="target size as WxH, e.g. 256x256")
    ingest.add_argument("--seed", type=int, default=DEFAULT_SEED, help="split shuffle seed")
    ingest.add_argument(
        "--require-tumor",
        action="store_true",
        help="drop records whose mask is empty",
    )
    ingest.set_defaults(func=_cmd_ingest)

    pca_parser = sub.add_parser("pca", help="fit, reconstruct, and inspect PCA models")
    pca_sub = pca_parser.add_subparsers(dest="pca_command", required=True)

    fit = pca_sub.add_parser("fit", help="fit a model on a matrix file")
    fit.add_argument("--in", dest="infile", required=True, help="input .umx matrix")
    fit.add_argument("--out", required=True, help="output model file")
    fit.add_argument("--fit-on", choices=("all", "train"), default="all")
    fit.add_argument("--split", default=None, help="split.json, needed for --fit-on train")
    fit.set_defaults(func=_cmd_pca_fit)

    reconstruct = pca_sub.add_parser("reconstruct", help="rebuild data from k components")
    reconstruct.add_argument("--model", required=True)
    reconstruct.add_argument("--k", default="auto", help="'auto' (eigenvalue > 1) or a count")
    reconstruct.add_argument(
        "--out", required=True, help=".umx file or a directory for PNGs"
    )
    reconstruct.add_argument("--size", default=None, help="PNG size as WxH when d is not square")
    reconstruct.add_argument("--ids", default=None, help="row id file (one id per line)")
    reconstruct.set_defaults(func=_cmd_pca_reconstruct)

    scree = pca_sub.add_parser("scree", help="write the eigenvalue table")
    scree.add_argument("--model", required=True)
    scree.add_argument("--out", required=True, help="output CSV")
    scree.set_defaults(func=_cmd_pca_scree)

    evaluate = sub.add_parser("evaluate", help="score a prediction directory")
    evaluate.add_argument("--pred", required=True, help="directory of prediction PNGs")
    evaluate.add_argument("--gt", required=True, help="directory of ground-truth masks")
    evaluate.add_argument("--out", required=True, help="per-image score CSV")
    evaluate.add_argument("--threshold", type=float, default=0.5)
    evaluate.set_defaults(func=_cmd_evaluate)

    ttest = sub.add_parser("ttest", help="compare two score samples")
    ttest.add_argument("--a", required=True, help="first sample (score CSV or number list)")
    ttest.add_argument("--b", required=True, help="second sample")
    ttest.add_argument("--paired", action="store_true")
    ttest.add_argument("--metric", default="recall", help="column to read from score CSVs")
    ttest.set_defaults(func=_cmd_ttest)

    run = sub.add_parser("run", help="run the experiment pipeline")
    run.add_argument("--config", required=True)
    run.add_argument(
        "--results-from",
        default=None,
        help="directory holding results.csv; report without training",
    )
    run.add_argument("--stage", choices=("ingest", "pca", "train", "evaluate", "report"))
    run.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        IngestError,
        PipelineError,
        stats.DegenerateTestError,
        ValueError,
        FileNotFoundError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
