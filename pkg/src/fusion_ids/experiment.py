"""End-to-end experiment: base classifiers, fusion rows, reports.

Pipeline: parse -> thin -> balance -> split -> normalization and encoding
fitted on train -> ANN and SVM trained on train -> validation PCC -> one
Naive Bayes combiner per fusion row fitted on train -> every row scored on
test.  Nothing is written until every row has been computed.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import jsonschema
import numpy as np

from . import __version__
from .errors import ExperimentError, RateError
from .evalkit import ConfusionMatrix, pcc, pct, pct_value, rates, tally
from .fusion import ANN, SVM, FusionFeatureSet, build_fusion_vectors, nb_decide_batch, nb_fit
from .mlp import MlpConfig, mlp_decide, mlp_train
from .nslkdd import ClassLabel, read_dataset
from .preprocess import (
    SplitSpec,
    apply_norm,
    build_plan,
    encode_dataset,
    fit_norm_stats,
    prepare,
)
from .svm import SvmConfig, svm_decide, svm_train

REPORT_FORMATS = ("csv", "json", "plot-data")


def load_schema() -> dict:
    return json.loads(resources.files("fusion_ids.configs").joinpath("experiment.schema.json").read_text())


def builtin_config_path(name: str) -> Path | None:
    res = resources.files("fusion_ids.configs").joinpath(f"{name}.json")
    return Path(str(res)) if res.is_file() else None


@dataclass(frozen=True)
class RowSpec:
    name: str
    base: str | None = None
    fusion: FusionFeatureSet | None = None
    paper: Mapping[str, float] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[str, ...]
    rows: tuple[RowSpec, ...]
    split: SplitSpec = SplitSpec()
    thinning_caps: Mapping[str, int | None] | None = None
    sample_size: int | None = None
    mlp: MlpConfig = MlpConfig()
    svm: SvmConfig = SvmConfig()
    alpha: float = 1.0
    pcc_weighting: bool = False
    output_dir: str = "runs/experiment"
    formats: tuple[str, ...] = REPORT_FORMATS
    name: str = "experiment"
    raw: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], base_dir: Path | None = None) -> "ExperimentConfig":
        jsonschema.validate(d, load_schema())
        rows = []
        for r in d["rows"]:
            fs = FusionFeatureSet.from_dict(r["fusion"]) if "fusion" in r else None
            name = r.get("name") or (fs.name if fs else r["base"].upper())
            rows.append(RowSpec(name, r.get("base"), fs, r.get("paper")))
        datasets = []
        for p in d["datasets"]:
            path = Path(p)
            if not path.is_absolute() and base_dir is not None and (base_dir / path).exists():
                path = base_dir / path
            datasets.append(str(path))
        svm = d.get("svm", {})
        return cls(
            datasets=tuple(datasets),
            rows=tuple(rows),
            split=SplitSpec(**d.get("split", {})),
            thinning_caps=d.get("thinning_caps"),
            sample_size=d.get("sample_size"),
            mlp=MlpConfig(**d.get("mlp", {})),
            svm=SvmConfig(lam=svm.get("lambda", 1e-4), epochs=svm.get("epochs", 20),
                          seed=svm.get("seed", 0), project=svm.get("project", True)),
            alpha=d.get("alpha", 1.0),
            pcc_weighting=d.get("pcc_weighting", False),
            output_dir=d.get("output_dir", "runs/experiment"),
            formats=tuple(d.get("formats", REPORT_FORMATS)),
            name=d.get("name", "experiment"),
            raw=dict(d),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), path.parent)


@dataclass
class RowResult:
    name: str
    kind: str
    weighting: str
    feature_ids: tuple[str, ...]
    confusion: ConfusionMatrix  # positive class = normal
    paper: Mapping[str, float] | None = None

    def metrics(self, positive: ClassLabel = ClassLabel.NORMAL) -> dict[str, float | None]:
        cm = self.confusion if positive is ClassLabel.NORMAL else self.confusion.swapped()
        return safe_metrics(cm)


def safe_metrics(cm: ConfusionMatrix) -> dict[str, float | None]:
    """PCC/TPR/FPR with ``None`` where a denominator is empty."""
    out: dict[str, float | None] = {"pcc": pcc(cm), "tpr": None, "fpr": None}
    try:
        m = rates(cm)
        out["tpr"], out["fpr"] = m.tpr, m.fpr
    except RateError:
        if cm.tp + cm.fn:
            out["tpr"] = cm.tp / (cm.tp + cm.fn)
        if cm.fp + cm.tn:
            out["fpr"] = cm.fp / (cm.fp + cm.tn)
    return out


@dataclass
class ExperimentReport:
    name: str
    rows: list[RowResult]
    provenance: dict[str, Any]
    manifest: dict[str, Any]
    base_classifiers: dict[str, dict[str, float]]

    def dominance(self) -> dict[str, Any]:
        """Does the best fusion row beat both base classifiers (positive class = normal)?"""
        base = {r.name: r.metrics() for r in self.rows if r.kind == "base"}
        fused = [(r.name, r.metrics()) for r in self.rows if r.kind == "fusion"]
        base_fpr = [m["fpr"] for m in base.values() if m["fpr"] is not None]
        base_tpr = [m["tpr"] for m in base.values() if m["tpr"] is not None]
        fused = [(n, m) for n, m in fused if m["fpr"] is not None and m["tpr"] is not None]
        if not base_fpr or not fused:
            return {"applicable": False}
        best_name, best = min(fused, key=lambda nm: (nm[1]["fpr"], -nm[1]["tpr"]))
        return {
            "applicable": True,
            "best_fusion_row": best_name,
            "fpr_not_above_best_base": best["fpr"] <= min(base_fpr),
            "tpr_within_half_point_of_best_base": best["tpr"] >= max(base_tpr) - 0.005,
            "some_fusion_fpr_strictly_below_all_bases": any(
                m["fpr"] < min(base_fpr) for _, m in fused
            ),
        }

    def to_dict(self) -> dict[str, Any]:
        rows = []
        for r in self.rows:
            rows.append({
                "name": r.name,
                "kind": r.kind,
                "weighting": r.weighting,
                "features": list(r.feature_ids),
                "paper": dict(r.paper) if r.paper else None,
                "confusion": {
                    "positive_normal": r.confusion.to_dict(),
                    "positive_attack": r.confusion.swapped().to_dict(),
                },
                "metrics_pct": {
                    "positive_normal": {k: pct_value(v) for k, v in r.metrics(ClassLabel.NORMAL).items()},
                    "positive_attack": {k: pct_value(v) for k, v in r.metrics(ClassLabel.ATTACK).items()},
                },
            })
        return {
            "name": self.name,
            "toolkit_version": self.provenance["toolkit_version"],
            "provenance": self.provenance,
            "base_classifiers": self.base_classifiers,
            "rows": rows,
            "dominance": self.dominance(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentReport":
        rows = [
            RowResult(
                r["name"], r["kind"], r["weighting"], tuple(r["features"]),
                ConfusionMatrix(**r["confusion"]["positive_normal"]), r.get("paper"),
            )
            for r in d["rows"]
        ]
        return cls(d["name"], rows, dict(d["provenance"]), {}, dict(d.get("base_classifiers", {})))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class _Stage:
    """Context manager tagging exceptions with the pipeline stage name."""

    def __init__(self, name: str, log: Callable[[str], None] | None):
        self.name = name
        self.log = log

    def __enter__(self):
        if self.log:
            self.log(f"[{self.name}]")
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, ExperimentError) and isinstance(exc, Exception):
            raise ExperimentError(self.name, exc) from exc
        return False


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_experiment(
    cfg: ExperimentConfig,
    log: Callable[[str], None] | None = None,
    datasets: Sequence[str] | None = None,
) -> ExperimentReport:
    """Run every configured row; raises :class:`ExperimentError` naming the failed stage."""
    with _Stage("parse", log):
        ds = read_dataset(list(datasets or cfg.datasets))
    with _Stage("preprocess", log):
        balanced, splits = prepare(ds, cfg.split, cfg.thinning_caps, cfg.sample_size)
    with _Stage("normalize", log):
        stats = fit_norm_stats(splits.train)
        train = apply_norm(splits.train, stats)
        val = apply_norm(splits.validation, stats)
        test = apply_norm(splits.test, stats)
        plan = build_plan(train)
        X_tr, X_val, X_te = (encode_dataset(d, plan) for d in (train, val, test))
        y_tr, y_val, y_te = (np.asarray(d.labels(), dtype=np.int8) for d in (train, val, test))

    need = {r.base for r in cfg.rows if r.base}
    for r in cfg.rows:
        if r.fusion is not None:
            need.update(name for name, on in (("ann", r.fusion.use_ann), ("svm", r.fusion.use_svm)) if on)
    ann = svm = None
    base_info: dict[str, dict[str, float]] = {}
    if "ann" in need:
        with _Stage("train_ann", log):
            ann = mlp_train(X_tr, y_tr, cfg.mlp)
            ann.validation_pcc = pcc(tally(mlp_decide(ann, X_val), y_val))
            base_info["ann"] = {"validation_pcc": ann.validation_pcc, "final_loss": ann.history[-1]}
    if "svm" in need:
        with _Stage("train_svm", log):
            svm = svm_train(X_tr, y_tr, cfg.svm)
            svm.validation_pcc = pcc(tally(svm_decide(svm, X_val), y_val))
            base_info["svm"] = {"validation_pcc": svm.validation_pcc}

    results: list[RowResult] = []
    for row in cfg.rows:
        with _Stage(f"row:{row.name}", log):
            if row.base == "ann":
                results.append(RowResult(row.name, "base", "none", ("ann",),
                                         tally(mlp_decide(ann, X_te), y_te), row.paper))
                continue
            if row.base == "svm":
                results.append(RowResult(row.name, "base", "none", ("svm",),
                                         tally(svm_decide(svm, X_te), y_te), row.paper))
                continue
            fs = row.fusion
            vec_tr = build_fusion_vectors(train, ann, svm, fs, X=X_tr)
            vec_te = build_fusion_vectors(test, ann, svm, fs, X=X_te)
            modes = [("unweighted", None)]
            if cfg.pcc_weighting and (fs.use_ann or fs.use_svm):
                weights = {}
                if fs.use_ann:
                    weights[ANN] = ann.validation_pcc
                if fs.use_svm:
                    weights[SVM] = svm.validation_pcc
                modes.append(("pcc", weights))
            for mode, weights in modes:
                model = nb_fit(vec_tr, y_tr, cfg.alpha, weights)
                name = row.name if mode == "unweighted" else f"{row.name} [PCC-weighted]"
                results.append(RowResult(name, "fusion", mode, fs.feature_ids,
                                         tally(nb_decide_batch(model, vec_te), y_te), row.paper))

    manifest = splits.manifest.to_dict()
    manifest_text = json.dumps(manifest)
    provenance = {
        "toolkit_version": __version__,
        "seed": cfg.split.seed,
        "config": dict(cfg.raw),
        "split_manifest": {
            "file": "split_manifest.json",
            "sha256": _sha256(manifest_text + "\n"),
            "prepared_records": len(balanced),
            "sizes": {"train": len(splits.train), "validation": len(splits.validation),
                      "test": len(splits.test)},
        },
    }
    return ExperimentReport(cfg.name, results, provenance, manifest, base_info)


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["classifier", "tpr", "fpr", "pcc", "tpr_attack_positive", "fpr_attack_positive",
                "paper_tpr", "paper_fpr", "tp", "tn", "fp", "fn"])
    for r in report.rows:
        mn, ma = r.metrics(ClassLabel.NORMAL), r.metrics(ClassLabel.ATTACK)
        paper = r.paper or {}
        cm = r.confusion
        w.writerow([r.name, pct(mn["tpr"]), pct(mn["fpr"]), pct(mn["pcc"]), pct(ma["tpr"]),
                    pct(ma["fpr"]), paper.get("tpr", ""), paper.get("fpr", ""),
                    cm.tp, cm.tn, cm.fp, cm.fn])
    return buf.getvalue()


def plot_data(report: ExperimentReport) -> tuple[str, str]:
    """CSV of (classifier, tpr, fpr, pcc) plus a JSON scatter description."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["classifier", "tpr", "fpr", "pcc"])
    points = []
    for r in report.rows:
        m = r.metrics()
        w.writerow([r.name, pct(m["tpr"]), pct(m["fpr"]), pct(m["pcc"])])
        points.append({"label": r.name, "x": pct_value(m["fpr"]), "y": pct_value(m["tpr"]),
                       "kind": r.kind})
    series = [{"name": "measured", "points": points}]
    paper_pts = [{"label": r.name, "x": r.paper["fpr"], "y": r.paper["tpr"], "kind": r.kind}
                 for r in report.rows if r.paper]
    if paper_pts:
        series.append({"name": "paper", "points": paper_pts})
    spec = {
        "type": "scatter",
        "title": f"{report.name}: TPR vs FPR (positive class = normal)",
        "x_axis": {"label": "FPR (%)", "field": "fpr"},
        "y_axis": {"label": "TPR (%)", "field": "tpr"},
        "data_file": "plot_data.csv",
        "series": series,
    }
    return buf.getvalue(), json.dumps(spec, indent=2) + "\n"


def render_outputs(report: ExperimentReport, formats: Sequence[str]) -> dict[str, str]:
    """File name -> content for every requested format (plus the split manifest)."""
    out = {}
    if report.manifest:
        out["split_manifest.json"] = json.dumps(report.manifest) + "\n"
    if "json" in formats:
        out["report.json"] = json.dumps(report.to_dict(), indent=2) + "\n"
    if "csv" in formats:
        out["report.csv"] = report_csv(report)
    if "plot-data" in formats:
        out["plot_data.csv"], out["plot_data.json"] = plot_data(report)
    return out


def write_report(report: ExperimentReport, out_dir: str | Path, formats: Sequence[str]) -> list[Path]:
    files = render_outputs(report, formats)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written


def emit_plot_data(report: ExperimentReport, path: str | Path) -> tuple[Path, Path]:
    """Write ``path`` (CSV) and a sibling ``.json`` scatter description."""
    path = Path(path)
    csv_text, spec = plot_data(report)
    json_path = path.with_suffix(".json")
    path.write_text(csv_text, encoding="utf-8")
    json_path.write_text(spec, encoding="utf-8")
    return path, json_path


def format_table(report: ExperimentReport) -> str:
    """Plain-text table: measured rates next to the published reference values."""
    lines = [f"{'classifier':<48} {'TPR':>7} {'FPR':>7} {'PCC':>7}   {'paper TPR':>9} {'paper FPR':>9}"]
    for r in report.rows:
        m = r.metrics()
        paper = r.paper or {}
        lines.append(
            f"{r.name:<48} {pct(m['tpr']):>7} {pct(m['fpr']):>7} {pct(m['pcc']):>7}   "
            f"{paper.get('tpr', ''):>9} {paper.get('fpr', ''):>9}"
        )
    return "\n".join(lines)
