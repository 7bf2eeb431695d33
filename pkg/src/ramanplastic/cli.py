"""Command-line entry point.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .augment import AugmentError
from .config import BUNDLED, ConfigError, ExperimentConfig, dump_config, load_config
from .dataset import (
    POLYMER_TYPES,
    DataFormatError,
    DatasetError,
    Source,
    assemble_train_test,
    load_library,
    parse_spectrum_csv,
    write_library,
)
from .evaluation import (
    SweepPoint,
    common_length,
    compare_models,
    fit_model,
    prepare_training_set,
    run_ablation,
    run_experiment,
    sweep_bins,
    sweep_noise,
    write_sweep_csv,
)
from .models import ModelFormatError, load_model, predict, save_model, vote_distribution
from .preprocess import PipelineConfig, build_features, spectrum_features

log = logging.getLogger("ramanplastic")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
DATA_ERRORS = (DatasetError, DataFormatError, AugmentError, ModelFormatError, FileNotFoundError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_all(paths: dict, synonyms=None):
    libs, reports = {}, []
    for key in ("slopp", "sloppe", "mendeley"):
        ds, report = load_library(paths[key], Source(key), synonyms)
        libs[key] = ds
        reports.append(report)
    train, test = assemble_train_test(libs["slopp"], libs["mendeley"], libs["sloppe"])
    return libs, train, test, reports


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    paths = cfg.data_paths(getattr(args, "data_root", None))
    cfg.data = {**cfg.data, **{k: str(p.resolve()) for k, p in paths.items()}}
    return cfg


def _out_dir(args, cfg=None) -> Path:
    out = Path(args.out) if args.out else Path(cfg.out if cfg else "runs")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(args) -> int:
    if args.config:
        paths = _config(args).data_paths()
    else:
        missing = [n for n in ("slopp", "sloppe", "mendeley") if getattr(args, n) is None]
        if missing:
            raise ConfigError(f"ingest needs --config or all of --slopp/--sloppe/--mendeley (missing {missing})")
        paths = {n: Path(getattr(args, n)) for n in ("slopp", "sloppe", "mendeley")}
    libs, train, test, reports = _load_all(paths)
    rows = [("polymer type", "SLoPP", "SLoPP-E", "Mendeley", "train", "test")]
    for t in POLYMER_TYPES:
        cells = [libs[k].counts().get(t, 0) for k in ("slopp", "sloppe", "mendeley")]
        cells += [train.counts().get(t, 0), test.counts().get(t, 0)]
        rows.append((t, *[str(c) if c else "-" for c in cells]))
    rows.append(("total", *[str(len(libs[k])) for k in ("slopp", "sloppe", "mendeley")], str(len(train)), str(len(test))))
    width = max(len(r[0]) for r in rows)
    for r in rows:
        print(f"{r[0]:<{width}}  " + "  ".join(f"{c:>8}" for c in r[1:]))
    if args.out:
        out = _out_dir(args)
        with (out / "load_report.jsonl").open("w", encoding="utf-8") as fh:
            for rep in reports:
                for rec in rep.rejected:
                    fh.write(json.dumps({"source": rep.source.value, **rec}, sort_keys=True) + "\n")
        print(f"load report written to {out / 'load_report.jsonl'}")
    return EXIT_OK


def _write_points(out: Path, points, value_name: str, csv_name: str) -> None:
    with (out / csv_name).open("w", newline="", encoding="utf-8") as fh:
        write_sweep_csv(points, fh, value_name)
    reports_dir = out / "reports"
    reports_dir.mkdir(exist_ok=True)
    timings = {}
    for p in points:
        for r in p.reports:
            stem = f"{r.name}_seed{r.seed}"
            (reports_dir / f"{stem}.json").write_text(r.to_json() + "\n", encoding="utf-8")
            with (reports_dir / f"{stem}_confusion.csv").open("w", newline="", encoding="utf-8") as fh:
                r.confusion.to_csv(fh)
            timings[stem] = r.wall_time
    summary = {"points": [p.row() for p in points]}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    # wall times vary between runs, so they live outside the reports
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_run(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    _, train, test, _ = _load_all(cfg.data_paths(), cfg.data.get("synonyms"))
    (out / "config.resolved.yaml").write_text(dump_config(cfg), encoding="utf-8")
    seeds, jobs = cfg.seeds, args.jobs
    aug = cfg.augmentation if cfg.augmentation else None
    exp = cfg.experiment
    if exp == "ablation":
        points = run_ablation(train, test, cfg.pipeline, cfg.model, seeds, jobs)
        _write_points(out, points, "experiment", "ablation.csv")
    elif exp == "bin-sweep":
        points = sweep_bins(train, test, cfg.pipeline, cfg.model, cfg.widths, aug, seeds, jobs)
        _write_points(out, points, "bin_width", "bins.csv")
    elif exp == "noise-sweep":
        points = sweep_noise(train, test, cfg.pipeline, cfg.model, cfg.amplitudes, aug, seeds, jobs)
        _write_points(out, points, "amplitude", "noise.csv")
    elif exp == "model-comparison":
        models = cfg.models or [cfg.model]
        points = compare_models(train, test, cfg.pipeline, aug, models, seeds, jobs)
        _write_points(out, points, "model", "models.csv")
    else:  # final | custom
        reports = [run_experiment(train, test, cfg.pipeline, cfg.model, aug, s, exp, jobs) for s in seeds]
        points = [SweepPoint(exp, exp, reports)]
        _write_points(out, points, "experiment", f"{exp}.csv")
    for p in points:
        print(f"{p.label:<32} mean accuracy {p.mean_accuracy:.4f} over {len(p.reports)} seed(s)")
    print(f"results written to {out}")
    return EXIT_OK


def cmd_features(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    _, train, test, _ = _load_all(cfg.data_paths(), cfg.data.get("synonyms"))
    aug = cfg.augmentation if cfg.augmentation else None
    train_ds = prepare_training_set(train, cfg.pipeline, aug, cfg.seed)
    pipeline = cfg.pipeline
    if not pipeline.scale and pipeline.truncate_to is None:
        pipeline = replace(pipeline, truncate_to=common_length(train_ds, test))
    for name, ds, p in (("train", train_ds, pipeline), ("test", test, replace(pipeline, noise_amplitude=0.0))):
        fm = build_features(ds, p, cfg.seed)
        with (out / f"features_{name}.csv").open("w", newline="", encoding="utf-8") as fh:
            fm.to_csv(fh)
        print(f"{name}: {len(fm)} rows x {fm.n_features} features -> {out / f'features_{name}.csv'}")
    return EXIT_OK


def cmd_augment(args) -> int:
    cfg = _config(args)
    if not cfg.augmentation:
        raise ConfigError("augmentation.targets: empty, nothing to augment")
    out = _out_dir(args, cfg)
    _, train, _, _ = _load_all(cfg.data_paths(), cfg.data.get("synonyms"))
    ds = prepare_training_set(train, cfg.pipeline, cfg.augmentation, cfg.seed)
    write_library(ds, out)
    n_aug = sum(s.is_augmented for _, s in ds.items())
    print(f"{len(ds)} samples ({n_aug} augmented) written to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    _, train, test, _ = _load_all(cfg.data_paths(), cfg.data.get("synonyms"))
    aug = cfg.augmentation if cfg.augmentation else None
    if not cfg.pipeline.scale:
        raise ConfigError("pipeline.scale: saved models need a scaled pipeline (fixed feature width)")
    train_ds = prepare_training_set(train, cfg.pipeline, aug, cfg.seed)
    fm = build_features(train_ds, cfg.pipeline, cfg.seed)
    model = fit_model(fm, cfg.model, cfg.seed, args.jobs)
    target = Path(args.model)
    target.parent.mkdir(parents=True, exist_ok=True)
    save_model(target, model, replace(cfg.pipeline, noise_amplitude=0.0).to_dict())
    print(f"{cfg.model.kind} model on {len(fm)} samples x {fm.n_features} features -> {target}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model, pipeline = load_model(args.model)
    if pipeline is None:
        raise ModelFormatError(f"{args.model}: no pipeline config embedded in the model file")
    pipeline = PipelineConfig.from_dict(pipeline)
    with open(args.spectrum, newline="", encoding="utf-8") as fh:
        spectrum = parse_spectrum_csv(fh, sample_id=str(args.spectrum), path=args.spectrum)
    try:
        x = spectrum_features(spectrum, pipeline)
        label = predict(model, x)
    except ValueError as exc:
        raise DatasetError(f"spectrum does not fit the model pipeline: {exc}") from None
    print(label)
    for cls, frac in sorted(vote_distribution(model, x).items(), key=lambda kv: (-kv[1], kv[0])):
        if frac > 0:
            print(f"  {cls:<32} {frac:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ramanplastic", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required,
                        help=f"config file, or a bundled name: {', '.join(BUNDLED)}")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=None, help="output directory (default: config 'out')")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for forest training")
        sp.add_argument("--data-root", default=None, help="base directory for relative data paths")

    sp = sub.add_parser("ingest", help="load the three libraries and print per-type counts")
    common(sp, config_required=False)
    for name in ("slopp", "sloppe", "mendeley"):
        sp.add_argument(f"--{name}", default=None, help=f"{name} library directory")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("run", help="run a named experiment from a config")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("features", help="export train/test feature matrices as CSV")
    common(sp)
    sp.set_defaults(func=cmd_features)

    sp = sub.add_parser("augment", help="write the augmented training library")
    common(sp)
    sp.set_defaults(func=cmd_augment)

    sp = sub.add_parser("train", help="train a model and save it with its pipeline")
    common(sp)
    sp.add_argument("--model", required=True, help="output model file (JSON)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="classify one spectrum CSV with a saved model")
    sp.add_argument("model", help="model file written by 'train'")
    sp.add_argument("spectrum", help="two-column wavenumber,intensity CSV")
    sp.set_defaults(func=cmd_predict)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
