"""Command-line interface: ``fusion-ids <subcommand>``.

Exit status: 0 success, 1 usage error, 2 data or model error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import FusionIdsError
from .evalkit import pcc, tally
from .experiment import (
    REPORT_FORMATS,
    ExperimentConfig,
    ExperimentReport,
    builtin_config_path,
    format_table,
    render_outputs,
    report_csv,
    run_experiment,
    safe_metrics,
    write_report,
)
from .fusion import (
    ANN,
    SVM,
    FusionFeatureSet,
    NbFusionModel,
    build_fusion_vectors,
    nb_decide_batch,
    nb_fit,
)
from .mlp import MlpConfig, MlpModel, mlp_decide, mlp_train
from .nslkdd import class_counts, read_dataset, write_records
from .preprocess import (
    EncodingPlan,
    NormStats,
    SplitManifest,
    SplitSpec,
    apply_norm,
    build_plan,
    encode_dataset,
    fit_norm_stats,
    prepare,
)
from .svm import SvmConfig, SvmModel, svm_decide, svm_train


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _resolve_config(name: str) -> Path:
    path = Path(name)
    if path.is_file():
        return path
    builtin = builtin_config_path(name.removesuffix(".json"))
    if builtin is None:
        raise FileNotFoundError(f"no config file or built-in config named {name!r}")
    return builtin


def _load_config(name: str | None) -> ExperimentConfig | None:
    return ExperimentConfig.load(_resolve_config(name)) if name else None


def _cmd_parse(args) -> int:
    ds = read_dataset(args.paths, strict=not args.lenient)
    counts = class_counts(ds)
    print(f"{len(ds)} records ({counts.normal} normal, {counts.attack} attack)")
    if ds.skipped:
        print(f"{ds.skipped} malformed lines skipped")
    return 0


def _cmd_preprocess(args) -> int:
    cfg = _load_config(args.config)
    spec = cfg.split if cfg else SplitSpec()
    overrides = {k: v for k, v in (("seed", args.seed), ("eval_size", args.eval_size),
                                   ("attack_ratio", args.attack_ratio)) if v is not None}
    if args.equal_thirds:
        overrides["equal_thirds"] = True
    spec = dataclasses.replace(spec, **overrides)
    caps = cfg.thinning_caps if cfg else None
    sample_size = args.sample_size if args.sample_size is not None else (cfg.sample_size if cfg else None)
    ds = read_dataset(args.paths)
    balanced, splits = prepare(ds, spec, caps, sample_size)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "prepared.txt", "w", encoding="utf-8", newline="\n") as fh:
        write_records(balanced, fh)
    splits.manifest.dump(out / "split_manifest.json")
    print(f"prepared {len(balanced)} records: train {len(splits.train)}, "
          f"validation {len(splits.validation)}, test {len(splits.test)} -> {out}")
    return 0


def _load_splits(data: str, manifest: str):
    return SplitManifest.load(manifest).apply(read_dataset(data))


def _fit_preprocessing(train):
    stats = fit_norm_stats(train)
    plan = build_plan(apply_norm(train, stats))
    return stats, plan


def _bundle_preprocessing(stats: NormStats, plan: EncodingPlan) -> dict:
    return {"norm": stats.to_dict(), "plan": plan.to_dict()}


def _load_model(d: dict):
    kind = d["kind"]
    if kind == "mlp":
        return MlpModel.from_dict(d)
    if kind == "svm":
        return SvmModel.from_dict(d)
    if kind == "nb_fusion":
        return NbFusionModel.from_dict(d)
    raise ValueError(f"unknown model kind {kind!r}")


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    splits = _load_splits(args.data, args.manifest)
    stats, plan = _fit_preprocessing(splits.train)
    train = apply_norm(splits.train, stats)
    val = apply_norm(splits.validation, stats)
    X_tr, X_val = encode_dataset(train, plan), encode_dataset(val, plan)
    y_tr, y_val = np.asarray(train.labels()), np.asarray(val.labels())
    bundle = {"toolkit_version": __version__, "preprocessing": _bundle_preprocessing(stats, plan)}
    if args.model == "mlp":
        mcfg = cfg.mlp if cfg else MlpConfig()
        if args.seed is not None:
            mcfg = dataclasses.replace(mcfg, seed=args.seed)
        model = mlp_train(X_tr, y_tr, mcfg)
        model.validation_pcc = pcc(tally(mlp_decide(model, X_val), y_val))
    elif args.model == "svm":
        scfg = cfg.svm if cfg else SvmConfig()
        if args.seed is not None:
            scfg = dataclasses.replace(scfg, seed=args.seed)
        model = svm_train(X_tr, y_tr, scfg)
        model.validation_pcc = pcc(tally(svm_decide(model, X_val), y_val))
    else:
        if not args.features and not (args.ann or args.svm):
            raise UsageError("fusion needs --ann and/or --svm and/or --features")
        ann = _load_base(args.ann, "mlp")
        svm = _load_base(args.svm, "svm")
        packet = frozenset(f for f in (args.features or "").split(",") if f)
        fs = FusionFeatureSet(ann is not None, svm is not None, packet)
        weights = {}
        if args.pcc_weighting:
            if ann is not None:
                weights[ANN] = ann.validation_pcc
            if svm is not None:
                weights[SVM] = svm.validation_pcc
        alpha = args.alpha if args.alpha is not None else (cfg.alpha if cfg else 1.0)
        model = nb_fit(build_fusion_vectors(train, ann, svm, fs, X=X_tr), y_tr, alpha, weights)
        bundle["feature_set"] = fs.to_dict()
        bundle["base_models"] = {k: m.to_dict() for k, m in (("ann", ann), ("svm", svm)) if m is not None}
    bundle["model"] = model.to_dict()
    Path(args.out).write_text(json.dumps(bundle), encoding="utf-8")
    print(f"wrote {args.model} model to {args.out}")
    return 0


def _load_base(path: str | None, kind: str):
    if not path:
        return None
    bundle = json.loads(Path(path).read_text(encoding="utf-8"))
    model = _load_model(bundle["model"])
    if bundle["model"]["kind"] != kind:
        raise ValueError(f"{path} holds a {bundle['model']['kind']} model, expected {kind}")
    return model


def _cmd_eval(args) -> int:
    bundle = json.loads(Path(args.model).read_text(encoding="utf-8"))
    model = _load_model(bundle["model"])
    stats = NormStats.from_dict(bundle["preprocessing"]["norm"])
    plan = EncodingPlan.from_dict(bundle["preprocessing"]["plan"])
    splits = _load_splits(args.data, args.manifest)
    part = apply_norm(getattr(splits, args.split), stats)
    X = encode_dataset(part, plan)
    y = np.asarray(part.labels())
    if isinstance(model, MlpModel):
        pred = mlp_decide(model, X)
    elif isinstance(model, SvmModel):
        pred = svm_decide(model, X)
    else:
        fs = FusionFeatureSet.from_dict(bundle["feature_set"])
        bases = bundle.get("base_models", {})
        ann = MlpModel.from_dict(bases["ann"]) if "ann" in bases else None
        svm = SvmModel.from_dict(bases["svm"]) if "svm" in bases else None
        pred = nb_decide_batch(model, build_fusion_vectors(part, ann, svm, fs, X=X))
    cm = tally(pred, y)
    result = {
        "split": args.split,
        "records": len(part),
        "confusion_positive_normal": cm.to_dict(),
        "metrics_positive_normal": safe_metrics(cm),
        "metrics_positive_attack": safe_metrics(cm.swapped()),
    }
    if args.format == "json":
        print(json.dumps(result, indent=2))
    else:
        mn, ma = result["metrics_positive_normal"], result["metrics_positive_attack"]
        fmt = lambda v: "n/a" if v is None else f"{100 * v:.2f}"  # noqa: E731
        print(f"{args.split}: {len(part)} records, tp={cm.tp} tn={cm.tn} fp={cm.fp} fn={cm.fn}")
        print(f"positive=normal  TPR {fmt(mn['tpr'])}  FPR {fmt(mn['fpr'])}  PCC {fmt(mn['pcc'])}")
        print(f"positive=attack  TPR {fmt(ma['tpr'])}  FPR {fmt(ma['fpr'])}  PCC {fmt(ma['pcc'])}")
    return 0


def _cmd_experiment(args) -> int:
    cfg_path = _resolve_config(args.config)
    raw = json.loads(cfg_path.read_text(encoding="utf-8"))
    if args.seed is not None:
        raw.setdefault("split", {})["seed"] = args.seed
    if args.data:
        raw["datasets"] = args.data
    cfg = ExperimentConfig.from_dict(raw, cfg_path.parent)
    formats = args.format or list(cfg.formats)
    report = run_experiment(cfg, log=(lambda m: print(m, file=sys.stderr)) if args.verbose else None)
    out = args.out or cfg.output_dir
    write_report(report, out, formats)
    print(format_table(report))
    print(f"report written to {out}")
    return 0


def _cmd_report(args) -> int:
    report = ExperimentReport.load(args.report)
    fmt = args.format
    if fmt == "table":
        text = format_table(report) + "\n"
    elif fmt == "csv":
        text = report_csv(report)
    elif fmt == "json":
        text = json.dumps(report.to_dict(), indent=2) + "\n"
    else:
        files = render_outputs(report, ["plot-data"])
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            for name in ("plot_data.csv", "plot_data.json"):
                (out / name).write_text(files[name], encoding="utf-8")
            print(f"plot data written to {out}")
            return 0
        text = files["plot_data.csv"]
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fusion-ids", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("parse", help="validate NSL-KDD files and print class counts")
    sp.add_argument("paths", nargs="+")
    sp.add_argument("--lenient", action="store_true", help="skip malformed lines instead of failing")
    sp.set_defaults(func=_cmd_parse)

    sp = sub.add_parser("preprocess", help="thin, balance and split; write prepared data and manifest")
    sp.add_argument("paths", nargs="+")
    sp.add_argument("--config", help="experiment config supplying split/thinning settings")
    sp.add_argument("--seed", type=int, help="split seed (default: config or 0)")
    sp.add_argument("--eval-size", type=int, help="validation/test size (default 1000)")
    sp.add_argument("--attack-ratio", type=float, help="attack fraction (default 0.5)")
    sp.add_argument("--sample-size", type=int, help="stratified draw after balancing")
    sp.add_argument("--equal-thirds", action="store_true", help="split into three equal parts")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=_cmd_preprocess)

    sp = sub.add_parser("train", help="fit and serialize a model on a manifest's train split")
    sp.add_argument("model", choices=["mlp", "svm", "fusion"])
    sp.add_argument("--data", required=True, help="prepared dataset from `preprocess`")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--config", help="experiment config supplying hyperparameters")
    sp.add_argument("--seed", type=int, help="model seed override")
    sp.add_argument("--ann", help="trained mlp bundle (fusion only)")
    sp.add_argument("--svm", help="trained svm bundle (fusion only)")
    sp.add_argument("--features", help="comma-separated packet features: protocol,service,flag")
    sp.add_argument("--alpha", type=float, help="Laplace smoothing constant (default 1.0)")
    sp.add_argument("--pcc-weighting", action="store_true",
                    help="weight decision features by validation PCC")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_train)

    sp = sub.add_parser("eval", help="score a serialized model on one split")
    sp.add_argument("model")
    sp.add_argument("--data", required=True)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--split", choices=["train", "validation", "test"], default="test")
    sp.add_argument("--format", choices=["text", "json"], default="text")
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("experiment", help="run a full experiment config")
    sp.add_argument("--config", required=True, help="config file or built-in name (e.g. paper_table3)")
    sp.add_argument("--out", help="output directory (default: config output_dir)")
    sp.add_argument("--seed", type=int, help="split seed override")
    sp.add_argument("--data", nargs="+", help="dataset file(s) overriding the config")
    sp.add_argument("--format", nargs="+", choices=REPORT_FORMATS, help="report formats")
    sp.add_argument("-v", "--verbose", action="store_true", help="log stages to stderr")
    sp.set_defaults(func=_cmd_experiment)

    sp = sub.add_parser("report", help="render or convert a report.json")
    sp.add_argument("report")
    sp.add_argument("--format", choices=["table", "csv", "json", "plot-data"], default="table")
    sp.add_argument("--out", help="output file (directory for plot-data)")
    sp.set_defaults(func=_cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fusion-ids: error: {exc}", file=sys.stderr)
        return 1
    except (FusionIdsError, OSError, ValueError, KeyError, json.JSONDecodeError,
            jsonschema.ValidationError) as exc:
        print(f"fusion-ids: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
