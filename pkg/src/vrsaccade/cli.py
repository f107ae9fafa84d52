"""Command-line front end: ``vrsaccade <subcommand> ...``.

Exit codes: 0 success, 1 runtime error, 2 usage error.  Diagnostics go to
stderr; data goes to the named output files (and short summaries to stdout).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .divergence import analyze_session, per_eye_angle_deg
from .errors import VrSaccadeError
from .ingest import (
    apply_label_intervals,
    class_balance,
    dump_intervals,
    dump_nested_session,
    export_table,
    parse_intervals,
    parse_nested_session,
    parse_table,
)
from .model_select import DEFAULT_C_GRID, evaluate, train_test_split
from .pca import cumulative_variance, pca_fit, pca_transform, scree_table
from .pipeline import (
    Dataset,
    PipelineConfig,
    fit_boundary,
    prepare_dataset,
    run_pipeline,
)
from .plots import emit_plot, emit_table
from .preprocess import filter_invalid
from .stats import dagostino_k2
from .svm import load_model, predict_many, save_model
from .synth import SynthConfig, generate_with_script

logger = logging.getLogger("vrsaccade")

SUBCOMMANDS = ("synth", "ingest", "analyze", "pca", "train", "evaluate", "boundary", "report")


# ---------------------------------------------------------------------------
# io helpers


def _read(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path, text: str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load_tables(paths):
    return [parse_table(_read(p), participant_id=Path(p).stem, source=str(p)) for p in paths]


def _sibling(path, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + suffix)


def _parse_grid(text: str):
    """``default`` or ``C=0.1,1,10;gamma=0.01,0.1,scale``."""
    if text == "default":
        return DEFAULT_C_GRID, None
    C_list, gammas = DEFAULT_C_GRID, None
    for part in text.split(";"):
        key, _, values = part.partition("=")
        key = key.strip()
        items = [v.strip() for v in values.split(",") if v.strip()]
        if not items:
            raise ValueError(f"empty value list in grid spec {part!r}")
        if key == "C":
            C_list = tuple(float(v) for v in items)
        elif key == "gamma":
            gammas = tuple(items)
        else:
            raise ValueError(f"unknown grid key {key!r}; use C and gamma")
    return C_list, gammas


def _resolve_gammas(gammas, Z):
    if gammas is None:
        return None
    out = []
    for g in gammas:
        if g == "scale":
            out.append(1.0 / (Z.shape[1] * float(Z.var())))
        else:
            out.append(float(g))
    return tuple(out)


def _pipeline_config(args) -> PipelineConfig:
    C_list, gammas = _parse_grid(args.grid)
    return PipelineConfig(
        ratio=args.ratio,
        seed=args.seed,
        stratified=not args.unstratified,
        folds=args.folds,
        pcs=args.pcs,
        pca_mode=args.mode,
        C_grid=C_list,
        gamma_grid=gammas,
        metric=args.metric,
        balanced=args.class_weight == "balanced",
        filter_outliers=args.filter_outliers,
        iqr_k=args.iqr_k,
        n_jobs=args.jobs,
    )


def _with_gammas(config: PipelineConfig, dataset: Dataset, train_idx, pcs) -> PipelineConfig:
    """Turn symbolic gamma entries ('scale') into numbers using the training scores."""
    if config.gamma_grid is None:
        return config
    pca = pca_fit(dataset.X[train_idx], config.pca_mode)
    Z = pca_transform(pca, dataset.X[train_idx], pcs)
    return replace(config, gamma_grid=_resolve_gammas(config.gamma_grid, Z))


def _grid_rows(grid):
    return [(r.C, r.gamma, r.mean_score, *r.fold_scores) for r in grid.rows]


def _grid_header(grid):
    k = len(grid.rows[0].fold_scores) if grid.rows else 0
    return ["C", "gamma", f"mean_{grid.metric}"] + [f"fold{i + 1}" for i in range(k)]


def _report_dict(report, extra=None) -> dict:
    d = report.to_dict()
    d["n"] = int(report.confusion.sum())
    if extra:
        d.update(extra)
    return d


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    cfg = {}
    if args.config:
        cfg = SynthConfig.from_json(_read(args.config)).to_dict()
    overrides = {"seed": args.seed, "duration_s": args.duration, "rate_hz": args.rate,
                 "amblyopic_offset_deg": args.amblyopic_offset, "participant": args.participant,
                 "dropout_fraction": args.dropout}
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    config = SynthConfig.from_dict(cfg)
    session, saccades = generate_with_script(config)
    _write(args.output, dump_nested_session(session))
    intervals_path = args.intervals or _sibling(args.output, ".intervals.csv")
    _write(intervals_path, dump_intervals([s.interval() for s in saccades]))
    sac, _ = class_balance(session)
    print(f"{args.output}: {len(session)} samples, {len(saccades)} saccades, "
          f"saccade fraction {sac:.4f}")
    return 0


def cmd_ingest(args) -> int:
    session = parse_nested_session(_read(args.document), source=str(args.document))
    if args.labels:
        session = apply_label_intervals(session, parse_intervals(_read(args.labels)))
    _write(args.output, export_table(session))
    print(f"{args.output}: {len(session)} samples from participant {session.participant_id!r}")
    return 0


def cmd_analyze(args) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    stats_rows, norm_rows, series_plot = [], [], []
    for table in args.tables:
        session = _load_tables([table])[0]
        name = session.participant_id
        times, series, stats = analyze_session(session, args.iqr_k)
        clean, _ = filter_invalid(session)
        angles = [per_eye_angle_deg(s) for s in clean.samples]
        emit_table(zip(times, series, angles), out / f"{name}_divergence.csv",
                   ["timestamp", "distance", "angle_deg"])
        stats_rows.append((name, stats.min, stats.max, stats.mean, stats.n_used,
                           stats.n_removed_invalid, stats.n_removed_outlier))
        print(f"{name}: min={stats.min:.4f} max={stats.max:.4f} mean={stats.mean:.4f} "
              f"n={stats.n_used} invalid={stats.n_removed_invalid} "
              f"outliers={stats.n_removed_outlier}")
        if len(series) >= 20:
            rep = dagostino_k2(series)
            norm_rows.append((name, rep.n, rep.g1, rep.g2, rep.z1, rep.z2, rep.k2, rep.p))
        series_plot.append((name, times, series))
    emit_table(stats_rows, out / "divergence_stats.csv",
               ["participant", "min", "max", "mean", "n_used", "n_removed_invalid",
                "n_removed_outlier"])
    emit_table(norm_rows, out / "normality.csv",
               ["participant", "n", "skewness", "excess_kurtosis", "z_skew", "z_kurt", "k2", "p"])
    emit_plot("line", {"series": series_plot, "title": "Gaze ray direction difference",
                       "xlabel": "time (s)", "ylabel": "|left - right|"},
              out / "divergence.svg")
    return 0


def cmd_pca(args) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    data = prepare_dataset(_load_tables(args.tables))
    model = pca_fit(data.X, args.mode)
    scree = scree_table(model)
    emit_table(scree, out / "scree.csv", ["component", "eigenvalue", "ratio", "cumulative"])
    k4 = min(4, model.n_components)
    scores = pca_transform(model, data.X, k4)
    for k in sorted({min(2, k4), k4}):
        emit_table([(*row[:k], int(lbl)) for row, lbl in zip(scores, data.y)],
                   out / f"scores_{k}d.csv", [f"PC{i + 1}" for i in range(k)] + ["label"])
    emit_plot("line", {"series": [("explained variance ratio", [r[0] for r in scree],
                                   [r[2] for r in scree]),
                                  ("cumulative", [r[0] for r in scree], [r[3] for r in scree])],
                       "title": "Scree plot", "xlabel": "component", "ylabel": "ratio"},
              out / "scree.svg")
    if k4 >= 2:
        emit_plot("scatter", {"groups": [("not saccade", scores[~data.y, 0], scores[~data.y, 1]),
                                         ("saccade", scores[data.y, 0], scores[data.y, 1])],
                              "title": "PC1 vs PC2", "xlabel": "PC1", "ylabel": "PC2"},
                  out / "scatter.svg")
    print(f"cumulative variance through component {k4}: {cumulative_variance(model, k4):.4f}")
    return 0


def _train(args, tables):
    sessions = _load_tables(tables)
    config = _pipeline_config(args)
    data = prepare_dataset(sessions, config.filter_outliers, config.iqr_k)
    train_idx, _ = train_test_split(data.y, config.ratio, config.seed, config.stratified)
    config = _with_gammas(config, data, train_idx, config.pcs)
    return run_pipeline(sessions, config, dataset=data)


def _save_trained(result, path, grid_path) -> None:
    cfg = asdict(result.config)
    extra = {
        "pipeline": cfg,
        "pcs": result.config.pcs,
        "dataset": {
            "fingerprint": result.dataset.fingerprint(),
            "n_rows": int(result.dataset.y.size),
            "participants": list(result.dataset.participants),
            "test_indices": result.test_idx.tolist(),
        },
        "grid_best": list(result.grid.best),
    }
    save_model(path, result.model, result.pca, extra)
    emit_table(_grid_rows(result.grid), grid_path, _grid_header(result.grid))


def cmd_train(args) -> int:
    result = _train(args, args.tables)
    grid_path = args.grid_out or _sibling(args.output, ".grid.csv")
    _save_trained(result, args.output, grid_path)
    C, g = result.grid.best
    print(f"best C={C:g} gamma={g:.6g} cv_{result.grid.metric}={result.grid.best_row.mean_score:.4f}; "
          f"model written to {args.output}")
    return 0


def _evaluate_model(model_path, tables, all_rows=False):
    svm_model, pca_model, doc = load_model(model_path)
    pcs = int(doc.get("pcs", svm_model.n_features))
    cfg = doc.get("pipeline", {})
    data = prepare_dataset(_load_tables(tables), cfg.get("filter_outliers", False),
                           cfg.get("iqr_k", 3.0))
    rows = np.arange(data.y.size)
    scope = "all"
    meta = doc.get("dataset", {})
    if not all_rows and meta.get("fingerprint") == data.fingerprint():
        rows = np.asarray(meta["test_indices"], dtype=int)
        scope = "held-out"
    X = data.X[rows]
    Z = pca_transform(pca_model, X, pcs) if pca_model is not None else X
    report = evaluate(data.y[rows], predict_many(svm_model, Z))
    return report, scope


def cmd_evaluate(args) -> int:
    report, scope = _evaluate_model(args.model, args.tables, args.all_rows)
    _write(args.output, json.dumps(_report_dict(report, {"scope": scope}), indent=1) + "\n")
    if args.plot:
        emit_plot("matrix", {"matrix": report.confusion, "title": "Confusion matrix"}, args.plot)
    print(f"{scope} rows: accuracy={report.accuracy:.4f} precision_w={report.precision_w:.4f} "
          f"recall_w={report.recall_w:.4f} f1_w={report.f1_w:.4f}")
    return 0


def _boundary(args, tables):
    config = _pipeline_config(args)
    data = prepare_dataset(_load_tables(tables), config.filter_outliers, config.iqr_k)
    train_idx, _ = train_test_split(data.y, config.ratio, config.seed, config.stratified)
    config = _with_gammas(config, data, train_idx, args.pcs)
    return fit_boundary(data, config, args.resolution, args.pcs)


def _write_boundary(res, grid_path, plot_path):
    r = res.xs.size
    rows = [(res.xs[i % r], res.ys[i // r], v) for i, v in enumerate(res.values)]
    emit_table(rows, grid_path, ["x", "y", "decision_value"])
    if plot_path:
        emit_plot("contour", {
            "xs": res.xs, "ys": res.ys, "values": res.values,
            "support_vectors": res.model.support_vectors,
            "points": [("not saccade", res.scores[~res.labels, 0], res.scores[~res.labels, 1]),
                       ("saccade", res.scores[res.labels, 0], res.scores[res.labels, 1])],
            "title": "SVM decision function (2 PCs)", "xlabel": "PC1", "ylabel": "PC2",
        }, plot_path)


def cmd_boundary(args) -> int:
    res = _boundary(args, args.tables)
    _write_boundary(res, args.output, args.plot)
    C, g = res.grid.best
    print(f"boundary model C={C:g} gamma={g:.6g}: {res.values.size} grid values "
          f"written to {args.output}")
    return 0


def cmd_report(args) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    tables = []
    for doc in args.inputs:
        session = parse_nested_session(_read(doc), source=str(doc))
        table = out / f"{Path(doc).stem}.csv"
        _write(table, export_table(session))
        tables.append(str(table))

    args.tables = tables
    args.output = str(out / "analysis")
    cmd_analyze(args)
    args.output = str(out / "pca")
    cmd_pca(args)

    result = _train(args, tables)
    _save_trained(result, out / "model.json", out / "grid.csv")
    report, scope = _evaluate_model(out / "model.json", tables)
    _write(out / "evaluation.json", json.dumps(_report_dict(report, {"scope": scope}), indent=1) + "\n")
    emit_plot("matrix", {"matrix": report.confusion, "title": "Confusion matrix"},
              out / "confusion.svg")

    args.pcs = 2
    res = _boundary(args, tables)
    _write_boundary(res, out / "boundary.csv", out / "boundary.svg")

    manifest = {
        "version": __version__,
        "inputs": [str(p) for p in args.inputs],
        "tables": tables,
        "flags": {"iqr_k": args.iqr_k, "mode": args.mode, "folds": args.folds, "grid": args.grid,
                  "seed": args.seed, "ratio": args.ratio, "stratified": not args.unstratified,
                  "class_weight": args.class_weight, "metric": args.metric,
                  "filter_outliers": args.filter_outliers, "resolution": args.resolution},
        "classifier": {"pcs": result.config.pcs, "C": result.grid.best[0],
                       "gamma": result.grid.best[1]},
        "boundary": {"pcs": 2, "C": res.grid.best[0], "gamma": res.grid.best[1]},
        "evaluation": _report_dict(report, {"scope": scope}),
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=1) + "\n")
    print(f"report written to {out}: accuracy={report.accuracy:.4f} f1_w={report.f1_w:.4f}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_model_flags(p, pcs_default):
    p.add_argument("--pcs", type=int, default=pcs_default, help="principal components fed to the SVM")
    p.add_argument("--folds", type=int, default=4)
    p.add_argument("--grid", default="default",
                   help="'default' or e.g. 'C=0.1,1,10;gamma=0.01,0.1,scale'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratio", type=float, default=0.75, help="training fraction")
    p.add_argument("--unstratified", action="store_true", help="plain random split and folds")
    p.add_argument("--class-weight", choices=("balanced", "none"), default="balanced")
    p.add_argument("--metric", choices=("accuracy", "f1_w"), default="accuracy")
    p.add_argument("--mode", choices=("center", "zscore"), default="center")
    p.add_argument("--filter-outliers", action="store_true",
                   help="also drop divergence outliers from the classifier data")
    p.add_argument("--iqr-k", type=float, default=3.0)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for the grid search")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vrsaccade", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("synth", help="generate a labeled synthetic session document")
    p.add_argument("--config", help="JSON file with SynthConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--amblyopic-offset", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--participant")
    p.add_argument("--intervals", help="sidecar interval file (default: <doc>.intervals.csv)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="flatten a session document into a table")
    p.add_argument("document")
    p.add_argument("--labels", help="interval file (start_s,end_s) to label samples")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="per-eye divergence series, stats and normality test")
    p.add_argument("tables", nargs="+")
    p.add_argument("--iqr-k", type=float, default=3.0)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("pca", help="scree table and principal component scores")
    p.add_argument("tables", nargs="+")
    p.add_argument("--mode", choices=("center", "zscore"), default="center")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("train", help="grid-searched RBF SVM on principal components")
    p.add_argument("tables", nargs="+")
    _add_model_flags(p, 4)
    p.add_argument("--grid-out", help="grid-search table (default: <model>.grid.csv)")
    p.add_argument("-o", "--output", required=True, help="model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model")
    p.add_argument("model")
    p.add_argument("tables", nargs="+")
    p.add_argument("--all-rows", action="store_true",
                   help="score every row even when the held-out split is known")
    p.add_argument("--plot", help="confusion-matrix SVG")
    p.add_argument("-o", "--output", required=True, help="report file (JSON)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("boundary", help="decision-value grid of a 2-PC model")
    p.add_argument("tables", nargs="+")
    _add_model_flags(p, 2)
    p.add_argument("--resolution", type=int, default=50)
    p.add_argument("--plot", help="contour SVG")
    p.add_argument("-o", "--output", required=True, help="grid table")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("report", help="run the whole analysis into one directory")
    p.add_argument("--in", dest="inputs", nargs="+", required=True, help="session documents")
    _add_model_flags(p, 4)
    p.add_argument("--resolution", type=int, default=50)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_report)
    return parser


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (VrSaccadeError, OSError, ValueError, KeyError) as exc:
        print(f"vrsaccade {args.command}: error: {exc}", file=sys.stderr)
        logger.debug("traceback", exc_info=True)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
