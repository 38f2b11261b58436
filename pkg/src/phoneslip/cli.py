"""Command-line entry point.

    phoneslip synth    --out DIR [--seed N] [--samples-per-case N] [--plot]
    phoneslip ingest   --in RAW_DIR --out DIR
    phoneslip extract  --in DIR --out features.csv
    phoneslip validate --features features.csv --out correlation.txt
    phoneslip train    --features features.csv --pair AF --out model.json
    phoneslip eval     --features features.csv --out report.md [--plot]
    phoneslip plot     --in trace.csv|report.csv --out figure.svg

Exit status: 0 on success, 1 on domain errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidArgument, IoFailure, PhoneSlipError
from .evaluation import (
    DEFAULT_TRAIN_FRACTION,
    PAIRS,
    pair_name,
    parse_pair,
    rank_networks,
    render_csv,
    render_markdown,
    run_multi_seed,
    table_from_csv,
)
from .featuredb import (
    build_database,
    fit_standardization,
    load_matrix,
    save_matrix,
    standardize,
    validate_correlation,
)
from .features import FEATURE_NAMES
from .ingest import (
    CANONICAL_LENGTH,
    CANONICAL_RATE_HZ,
    list_trace_files,
    load_directory,
    parse_filename,
    read_trace_file,
    resample_window,
    serialize_trace,
    trace_filename,
)
from .nnets import GaConfig, TrainConfig, model_to_text, one_hot, parse_kinds, predict_labels, train
from .plots import render_plots
from .split import stratified_partition
from .synthgen import MotionModelParams, derive_seed, generate_dataset
from .util import sha256_file, write_text_atomic

log = logging.getLogger("phoneslip")

DEFAULT_SEED = 42


def _manifest(path: Path, command: str, args: argparse.Namespace, artifacts: list[Path]) -> None:
    base = path.parent
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "func"}
    doc = {
        "command": command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config": config,
        "artifacts": {
            str(p.relative_to(base)) if p.is_relative_to(base) else str(p): sha256_file(p)
            for p in sorted(artifacts)
        },
    }
    write_text_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _file_manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".run_manifest.json")


def _motion_params(args) -> MotionModelParams:
    params = MotionModelParams.from_dict(args.motion or {})
    if args.noise_accel is not None:
        params = replace(params, noise_sigma_accel=args.noise_accel)
    if args.noise_angle is not None:
        params = replace(params, noise_sigma_angle=args.noise_angle)
    params.validate()
    return params


def _train_config(args) -> TrainConfig:
    cfg = TrainConfig(epochs=args.epochs, learning_rate=args.learning_rate, momentum=args.momentum)
    cfg.validate()
    return cfg


def _ga_config(args) -> GaConfig:
    ga = GaConfig(population=args.ga_population, generations=args.ga_generations)
    ga.validate()
    return ga


def cmd_synth(args) -> int:
    out: Path = args.out
    params = _motion_params(args)
    traces = generate_dataset(args.samples_per_case, args.seed, params)
    written = []
    manifest_rows = ["case,sample_id,seed"]
    for tr in traces:
        path = out / trace_filename(tr.case, tr.sample_id)
        write_text_atomic(path, serialize_trace(tr))
        written.append(path)
        manifest_rows.append(f"{tr.case.name},{tr.sample_id},{derive_seed(args.seed, tr.case.index, tr.sample_id)}")
        if args.plot:
            svg = out / "plots" / (path.stem + ".svg")
            render_plots(tr, svg)
            written.append(svg)
    write_text_atomic(out / "manifest.csv", "\n".join(manifest_rows) + "\n")
    written.append(out / "manifest.csv")
    _manifest(out / "run_manifest.json", "synth", args, written)
    print(f"wrote {len(traces)} traces to {out}")
    return 0


def cmd_ingest(args) -> int:
    files = list_trace_files(args.inp)
    if not files:
        raise InvalidArgument(f"no trace files found in {args.inp}")
    written = []
    for case, sid, path in files:
        trace = resample_window(read_trace_file(path, case, sid), args.rate, args.length)
        dest = args.out / trace_filename(case, sid)
        write_text_atomic(dest, serialize_trace(trace))
        written.append(dest)
    _manifest(args.out / "run_manifest.json", "ingest", args, written)
    print(f"regularized {len(written)} traces into {args.out}")
    return 0


def cmd_extract(args) -> int:
    if not list_trace_files(args.inp):
        raise InvalidArgument(f"no trace files found in {args.inp}")
    traces = load_directory(args.inp, args.rate, args.length)
    matrix = build_database(traces)
    save_matrix(matrix, args.out)
    names = args.out.with_name("feature_names.txt")
    write_text_atomic(names, "\n".join(FEATURE_NAMES) + "\n")
    _manifest(_file_manifest_path(args.out), "extract", args, [args.out, names])
    print(f"{len(matrix)} rows x {len(FEATURE_NAMES)} features = {matrix.n_values} values -> {args.out}")
    return 0


def cmd_validate(args) -> int:
    matrix = load_matrix(args.features)
    scaled, _ = standardize(matrix, range(len(matrix)))
    report = validate_correlation(scaled)
    write_text_atomic(args.out, report.to_text())
    csv_path = args.out.with_suffix(".csv")
    write_text_atomic(csv_path, report.to_csv())
    _manifest(_file_manifest_path(args.out), "validate", args, [args.out, csv_path])
    sys.stdout.write(report.to_text())
    return 0


def cmd_train(args) -> int:
    matrix = load_matrix(args.features)
    pair = parse_pair(args.pair)
    kinds = parse_kinds(args.nets)
    rows = matrix.rows_for(*pair)
    sub = matrix.subset(rows)
    labels = np.array([0 if c == pair[0] else 1 for c in sub.cases])
    seed = derive_seed(args.seed, PAIRS.index(pair))
    train_rows, test_rows = stratified_partition(labels, args.train_fraction, seed)
    st = fit_standardization(sub.values[train_rows])
    cfg = replace(_train_config(args), seed=seed)
    written = []
    for kind in kinds:
        model = train(kind, st.apply(sub.values[train_rows]), one_hot(labels[train_rows]), cfg, _ga_config(args), st)
        acc = 100.0 * np.mean(predict_labels(model, sub.values[test_rows]) == labels[test_rows])
        dest = args.out if len(kinds) == 1 else args.out.with_name(f"{args.out.stem}_{kind.value}{args.out.suffix}")
        write_text_atomic(dest, model_to_text(model))
        written.append(dest)
        print(f"{pair_name(pair)} {kind.display_name}: test accuracy {acc:.2f}% -> {dest}")
    _manifest(_file_manifest_path(args.out), "train", args, written)
    return 0


def cmd_eval(args) -> int:
    matrix = load_matrix(args.features)
    table = run_multi_seed(
        matrix,
        _train_config(args),
        _ga_config(args),
        master_seed=args.seed,
        runs=args.multi_seed,
        kinds=parse_kinds(args.nets),
        train_fraction=args.train_fraction,
        workers=args.workers,
    )
    write_text_atomic(args.out, render_markdown(table))
    csv_path = args.out.with_suffix(".csv")
    write_text_atomic(csv_path, render_csv(table))
    written = [args.out, csv_path]
    if args.plot:
        svg = args.out.with_suffix(".svg")
        render_plots(table, svg)
        written.append(svg)
    _manifest(_file_manifest_path(args.out), "eval", args, written)
    sys.stdout.write(render_markdown(table))
    log.info("ranking: %s", [k.value for k in rank_networks(table)])
    return 0


def cmd_plot(args) -> int:
    src: Path = args.inp
    key = parse_filename(src.name)
    if key is not None:
        obj = resample_window(read_trace_file(src, *key), args.rate, args.length)
    else:
        try:
            text = src.read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read {src}: {exc}") from exc
        obj = table_from_csv(text)
    render_plots(obj, args.out)
    _manifest(_file_manifest_path(args.out), "plot", args, [args.out])
    print(f"wrote {args.out}")
    return 0


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (u64, default 42)")


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rate", type=float, default=CANONICAL_RATE_HZ, help="canonical sample rate in Hz")
    p.add_argument("--length", type=int, default=CANONICAL_LENGTH, help="canonical window length in samples")


def _add_training(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train-fraction", type=float, default=DEFAULT_TRAIN_FRACTION)
    p.add_argument("--nets", default="all", help="all|patternnet|feedforward|fitnet|cascade (comma-separated)")
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--learning-rate", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--momentum", type=float, default=TrainConfig.momentum)
    p.add_argument("--ga-population", type=int, default=GaConfig.population)
    p.add_argument("--ga-generations", type=int, default=GaConfig.generations)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phoneslip", description="Phone slip detection pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="JSON file of flag defaults; explicit flags win")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic trace dataset")
    p.add_argument("--out", type=Path, required=True)
    _add_seed(p)
    p.add_argument("--samples-per-case", type=int, default=20)
    p.add_argument("--noise-accel", type=float, default=None, help="accel noise sigma, m/s^2")
    p.add_argument("--noise-angle", type=float, default=None, help="angle noise sigma, degrees")
    p.add_argument("--plot", action="store_true", help="also write one SVG per trace")
    p.set_defaults(func=cmd_synth, motion=None)

    p = sub.add_parser("ingest", help="regularize raw trace CSVs onto the canonical grid")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_grid(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="build the 54-feature database from a trace directory")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_grid(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("validate", help="row-correlation check of a feature database")
    p.add_argument("--features", "--in", dest="features", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="train network(s) on one case pair")
    p.add_argument("--features", "--in", dest="features", type=Path, required=True)
    p.add_argument("--pair", required=True, help="two case letters, e.g. AF")
    p.add_argument("--out", type=Path, required=True)
    _add_seed(p)
    _add_training(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate all 15 pairs and write the performance report")
    p.add_argument("--features", "--in", dest="features", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_seed(p)
    _add_training(p)
    p.add_argument("--multi-seed", type=int, default=1, help="average over k master seeds")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--plot", action="store_true", help="also write a grouped bar chart SVG")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="render a trace CSV or report CSV to SVG")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_grid(p)
    p.set_defaults(func=cmd_plot)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        config = json.loads(args.config.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if not isinstance(config, dict):
        parser.error("config file must hold a JSON object")
    defaults = {k.replace("-", "_"): v for k, v in config.items()}
    for key in ("out", "inp", "features"):
        if key in defaults:
            defaults[key] = Path(defaults[key])
    # re-parse so explicit flags override config values
    subparser = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except PhoneSlipError as exc:
        print(f"error [{exc.stage}/{args.command}]: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
