"""End-to-end experiment orchestration.

A JSON manifest names datasets (CSV files, synthetic generator specs, or
merges of other entries), a list of arms (model variant plus whether the
pattern stream is fed), and the shared pattern/labeler/render/train/model
configuration. One master seed expands into per-stage sub-seeds via
``derive_seed(master, tag)``, so every output byte (dataset images,
checkpoints, report.json) is a pure function of (manifest, master seed),
and rebuilding without changes rewrites identical files.

In the pattern arm the pattern stream always receives the ground-truth
rendered crop, during training and evaluation alike, never the output of
any detector. Arms are isolated: a failing arm is recorded as an error
row and the remaining (dataset, arm) pairs still run. All paths stored in
reports and dataset manifests are relative, so two runs into different
output directories still produce identical bytes.
"""

from __future__ import annotations

import json
import platform
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import assemble_subchart_dataset, assemble_training_set
from .errors import CandlekitError, EmptyDataset, ManifestError, SourceNotFound
from .labeling import LabelerParams, StrengthLabel, build_samples
from .market_data import Series, SynthParams, parse_csv, synth_series, window
from .models import (
    SubchartPipelineResult,
    EvalReport,
    ModelConfig,
    TrainConfig,
    TrainReport,
    build_model,
    evaluate,
    predict,
    split_indices,
    train,
    train_subchart_pipeline,
)
from .nn import load_arrays, save_arrays
from .patterns import PatternRuleParams
from .raster import RenderSpec, render_pattern, render_window, write_ppm
from .rng import derive_seed

ARM_MODELS = ("mini_cnn", "two_stream", "subchart")


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    csv_path: str | None = None
    synth: SynthParams | None = None
    synth_n: int = 0
    members: tuple[str, ...] = ()

    @property
    def is_merge(self) -> bool:
        return bool(self.members)


@dataclass(frozen=True)
class ArmSpec:
    arm_name: str
    model: str
    include_pattern: bool


@dataclass(frozen=True)
class ModelSettings:
    """Input geometry and widths shared by all arms."""

    hist_hw: tuple[int, int] = (64, 64)
    pattern_hw: tuple[int, int] = (32, 32)
    subchart_hw: tuple[int, int] = (32, 32)
    block_widths: tuple[int, ...] = (8, 16, 32)
    pattern_widths: tuple[int, ...] = (8, 16)
    fc_dim: int = 64
    latent_dim: int = 32
    window: int = 30
    subchart_k: int = 3
    subchart_stride: int = 1


@dataclass
class ExperimentManifest:
    master_seed: int
    output_dir: str
    datasets: list[DatasetSpec]
    arms: list[ArmSpec]
    pattern_params: PatternRuleParams = field(default_factory=PatternRuleParams)
    labeler_params: LabelerParams = field(default_factory=LabelerParams)
    render_spec: RenderSpec = field(default_factory=RenderSpec)
    train_config: TrainConfig = field(default_factory=TrainConfig)
    model_settings: ModelSettings = field(default_factory=ModelSettings)
    base_dir: Path = Path(".")


def _build_dc(cls, payload: dict, what: str):
    try:
        return cls(**payload)
    except TypeError as exc:
        raise ManifestError(f"bad {what} section: {exc}") from exc


def _tupled(d: dict, *keys: str) -> dict:
    out = dict(d)
    for k in keys:
        if k in out and isinstance(out[k], list):
            out[k] = tuple(out[k])
    return out


def manifest_from_dict(doc: dict, base_dir: str | Path = ".") -> ExperimentManifest:
    if "master_seed" not in doc:
        raise ManifestError("manifest must carry a master_seed")
    datasets: list[DatasetSpec] = []
    names: set[str] = set()
    for entry in doc.get("datasets", []):
        name = entry.get("name")
        if not name or name in names:
            raise ManifestError(f"dataset entries need unique names, got {name!r}")
        names.add(name)
        kinds = [k for k in ("csv_path", "synth", "members") if k in entry]
        if len(kinds) != 1:
            raise ManifestError(
                f"dataset {name!r} must have exactly one of csv_path/synth/members"
            )
        if "csv_path" in entry:
            datasets.append(DatasetSpec(name=name, csv_path=entry["csv_path"]))
        elif "synth" in entry:
            synth = dict(entry["synth"])
            n = synth.pop("n", 0)
            if n < 1:
                raise ManifestError(f"dataset {name!r} synth spec needs n >= 1")
            datasets.append(
                DatasetSpec(name=name, synth=_build_dc(SynthParams, synth, name), synth_n=n)
            )
        else:
            members = tuple(entry["members"])
            if not members:
                raise ManifestError(f"merge dataset {name!r} has no members")
            datasets.append(DatasetSpec(name=name, members=members))
    if not datasets:
        raise ManifestError("manifest declares no datasets")
    concrete = {d.name for d in datasets if not d.is_merge}
    for d in datasets:
        for m in d.members:
            if m not in concrete:
                raise ManifestError(f"merge {d.name!r} references unknown member {m!r}")

    arms: list[ArmSpec] = []
    arm_names: set[str] = set()
    for entry in doc.get("arms", []):
        arm = ArmSpec(
            arm_name=entry.get("arm_name", ""),
            model=entry.get("model", "mini_cnn"),
            include_pattern=bool(entry.get("include_pattern", False)),
        )
        if not arm.arm_name or arm.arm_name in arm_names:
            raise ManifestError(f"arms need unique names, got {arm.arm_name!r}")
        if arm.model not in ARM_MODELS:
            raise ManifestError(f"arm model must be one of {ARM_MODELS}, got {arm.model!r}")
        arm_names.add(arm.arm_name)
        arms.append(arm)
    if not arms:
        raise ManifestError("manifest declares no arms")

    return ExperimentManifest(
        master_seed=int(doc["master_seed"]),
        output_dir=doc.get("output_dir", "out"),
        datasets=datasets,
        arms=arms,
        pattern_params=_build_dc(PatternRuleParams, doc.get("pattern", {}), "pattern"),
        labeler_params=_build_dc(LabelerParams, doc.get("labeler", {}), "labeler"),
        render_spec=_build_dc(
            RenderSpec,
            _tupled(
                doc.get("render", {}),
                "up_color", "down_color", "wick_color", "background", "annotation_tint",
            ),
            "render",
        ),
        train_config=_build_dc(TrainConfig, doc.get("train", {}), "train"),
        model_settings=_build_dc(
            ModelSettings,
            _tupled(
                doc.get("model", {}),
                "hist_hw", "pattern_hw", "subchart_hw", "block_widths", "pattern_widths",
            ),
            "model",
        ),
        base_dir=Path(base_dir),
    )


def load_manifest(path: str | Path) -> ExperimentManifest:
    path = Path(path)
    if not path.exists():
        raise SourceNotFound(f"manifest not found: {path}")
    return manifest_from_dict(json.loads(path.read_text()), base_dir=path.parent)


def _resolve_series(man: ExperimentManifest, ds: DatasetSpec) -> Series:
    if ds.csv_path is not None:
        path = Path(ds.csv_path)
        if not path.is_absolute():
            path = man.base_dir / path
        if not path.exists():
            raise SourceNotFound(f"csv for dataset {ds.name!r} not found: {path}")
        return parse_csv(path.read_text(), symbol=ds.name)
    seed = derive_seed(man.master_seed, f"dataset:{ds.name}")
    return synth_series(seed, ds.synth_n, ds.synth, symbol=ds.name)


_SAFE = re.compile(r"[^A-Za-z0-9_-]+")


def _safe_stem(symbol: str, end_index: int, kind: str) -> str:
    return f"{_SAFE.sub('-', symbol)}_{end_index:05d}_{kind}"


def build_dataset(man: ExperimentManifest, name: str, out_root: Path | None = None) -> Path:
    """Detect, label, and render one concrete dataset to disk.

    Writes ``manifest.jsonl`` plus per-sample history and pattern PPMs.
    Deterministic: rebuilding with identical inputs rewrites identical
    bytes.
    """
    ds = next((d for d in man.datasets if d.name == name), None)
    if ds is None:
        raise SourceNotFound(f"dataset {name!r} not in manifest")
    if ds.is_merge:
        raise ManifestError(f"dataset {name!r} is a merge; build its members instead")
    root = out_root if out_root is not None else Path(man.output_dir)
    series = _resolve_series(man, ds)
    samples = build_samples(
        series, man.pattern_params, man.labeler_params, w=man.model_settings.window
    )
    if not samples:
        raise EmptyDataset(f"dataset {name!r} produced no admissible samples")

    ddir = root / "datasets" / name
    (ddir / "history").mkdir(parents=True, exist_ok=True)
    (ddir / "pattern").mkdir(parents=True, exist_ok=True)
    lines = []
    for s in samples:
        stem = _safe_stem(series.symbol, s.match.end_index, s.match.kind.value)
        hist_rel = f"history/{stem}.ppm"
        pat_rel = f"pattern/{stem}.ppm"
        hist_img = render_window(s.history, man.render_spec)
        pat_img = render_pattern(s.history, s.match, man.render_spec)
        (ddir / hist_rel).write_bytes(write_ppm(hist_img))
        (ddir / pat_rel).write_bytes(write_ppm(pat_img))
        lines.append(
            json.dumps(
                {
                    "sample_id": s.sample_id,
                    "symbol": series.symbol,
                    "end_index": s.match.end_index,
                    "kind": s.match.kind.value,
                    "span": s.match.span,
                    "direction": s.match.direction.value,
                    "strength": s.strength.value,
                    "history_image_path": hist_rel,
                    "pattern_image_path": pat_rel,
                },
                sort_keys=True,
            )
        )
    (ddir / "manifest.jsonl").write_text("\n".join(lines) + "\n")
    return ddir


def ensure_datasets(man: ExperimentManifest, out_root: Path | None = None) -> dict[str, Path]:
    """Build every concrete dataset; returns name -> directory."""
    dirs: dict[str, Path] = {}
    for ds in man.datasets:
        if not ds.is_merge:
            dirs[ds.name] = build_dataset(man, ds.name, out_root)
    return dirs


def _member_dirs(man: ExperimentManifest, dirs: dict[str, Path], name: str) -> list[Path]:
    ds = next(d for d in man.datasets if d.name == name)
    if ds.is_merge:
        return [dirs[m] for m in ds.members]
    return [dirs[name]]


def _model_config(man: ExperimentManifest, ds_name: str, arm: ArmSpec) -> ModelConfig:
    ms = man.model_settings
    variant = "cae" if arm.model == "subchart" else arm.model
    seq_len = (ms.window - ms.subchart_k) // ms.subchart_stride + 1
    if arm.model == "subchart":
        input_shape = (3,) + tuple(ms.subchart_hw)
    else:
        input_shape = (3,) + tuple(ms.hist_hw)
    return ModelConfig(
        variant=variant,
        input_shape=input_shape,
        block_widths=ms.block_widths,
        fc_dim=ms.fc_dim,
        pattern_shape=(3,) + tuple(ms.pattern_hw),
        pattern_widths=ms.pattern_widths,
        latent_dim=ms.latent_dim,
        seq_len=seq_len,
        seed=derive_seed(man.master_seed, f"model:{ds_name}:{arm.arm_name}"),
    )


def _train_config(man: ExperimentManifest, ds_name: str, arm: ArmSpec) -> TrainConfig:
    return replace(
        man.train_config,
        seed=derive_seed(man.master_seed, f"train:{ds_name}:{arm.arm_name}"),
    )


@dataclass
class ArmOutcome:
    row: dict
    train_report: TrainReport | None = None


def _class_balance(labels: np.ndarray) -> dict[str, int]:
    strong = int(np.sum(labels == 1.0))
    return {"strong": strong, "weak": int(len(labels) - strong)}


def run_arm(
    man: ExperimentManifest,
    dirs: dict[str, Path],
    ds_name: str,
    arm: ArmSpec,
    out_root: Path,
) -> ArmOutcome:
    """Train and test one (dataset, arm) pair; saves checkpoints."""
    ms = man.model_settings
    member_dirs = _member_dirs(man, dirs, ds_name)
    cfg = _model_config(man, ds_name, arm)
    tc = _train_config(man, ds_name, arm)
    ckpt_dir = out_root / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    row: dict = {
        "dataset": ds_name,
        "arm": arm.arm_name,
        "model": arm.model,
        "include_pattern": arm.include_pattern,
        "status": "ok",
        "error": None,
        "threshold": 0.5,
    }

    if arm.model == "subchart":
        sub_ds = assemble_subchart_dataset(
            member_dirs, ms.subchart_hw, man.render_spec, k=ms.subchart_k, stride=ms.subchart_stride
        )
        result: SubchartPipelineResult = train_subchart_pipeline(sub_ds, tc, cfg)
        _tr, _va, te = split_indices(sub_ds.order, sub_ds.member, tc)
        probs = predict(result.cnn1d, np.ascontiguousarray(
            result.cae.encode(
                sub_ds.subcharts[te].reshape((-1,) + sub_ds.subcharts.shape[2:])
            ).reshape(len(te), -1, cfg.latent_dim).transpose(0, 2, 1)
        ))
        rep = evaluate(probs, sub_ds.labels[te])
        cae_rel = f"checkpoints/{ds_name}__{arm.arm_name}__cae.ckpt"
        clf_rel = f"checkpoints/{ds_name}__{arm.arm_name}__cnn1d.ckpt"
        save_arrays(out_root / cae_rel, result.cae.arrays())
        save_arrays(out_root / clf_rel, result.cnn1d.arrays())
        row.update(
            {
                "n_samples": len(sub_ds.labels),
                "n_train": result.report.n_train,
                "n_val": result.report.n_val,
                "n_test": result.report.n_test,
                "class_balance": _class_balance(sub_ds.labels),
                "metrics": {"accuracy": rep.accuracy, "f1": rep.f1, "auc": rep.auc},
                "checkpoints": [cae_rel, clf_rel],
                "cae_mse_first": result.cae_epoch_mse[0],
                "cae_mse_final": result.cae_epoch_mse[-1],
            }
        )
        return ArmOutcome(row=row, train_report=result.report)

    ts = assemble_training_set(
        member_dirs, ms.hist_hw, ms.pattern_hw, include_pattern=arm.include_pattern
    )
    model = build_model(cfg)
    report = train(model, ts, tc)
    _tr, _va, te = split_indices(ts.order, ts.member, tc)
    if arm.model == "two_stream":
        test_inputs = (ts.inputs[te], ts.pattern[te])
    else:
        test_inputs = ts.inputs[te]
    rep = evaluate(predict(model, test_inputs), ts.labels[te])
    ckpt_rel = f"checkpoints/{ds_name}__{arm.arm_name}.ckpt"
    save_arrays(out_root / ckpt_rel, model.arrays())
    row.update(
        {
            "n_samples": len(ts),
            "n_train": report.n_train,
            "n_val": report.n_val,
            "n_test": report.n_test,
            "class_balance": _class_balance(ts.labels),
            "metrics": {"accuracy": rep.accuracy, "f1": rep.f1, "auc": rep.auc},
            "checkpoints": [ckpt_rel],
        }
    )
    return ArmOutcome(row=row, train_report=report)


@dataclass
class ExperimentReport:
    rows: list[dict]
    environment: dict

    def to_dict(self) -> dict:
        return {"environment": self.environment, "rows": self.rows}

    def all_ok(self) -> bool:
        return all(r["status"] == "ok" for r in self.rows)


def run_experiment(man: ExperimentManifest, out_dir: str | Path | None = None) -> ExperimentReport:
    """Every dataset x arm, with per-arm error isolation; writes reports."""
    out_root = Path(out_dir) if out_dir is not None else Path(man.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    dirs: dict[str, Path] = {}
    build_errors: dict[str, str] = {}
    for ds in man.datasets:
        if ds.is_merge:
            continue
        try:
            dirs[ds.name] = build_dataset(man, ds.name, out_root)
        except Exception as exc:  # per-dataset isolation
            build_errors[ds.name] = f"{type(exc).__name__}: {exc}"

    rows: list[dict] = []
    for ds in man.datasets:
        broken = build_errors.get(ds.name) or next(
            (build_errors[m] for m in ds.members if m in build_errors), None
        )
        for arm in man.arms:
            if broken is not None:
                rows.append(
                    {
                        "dataset": ds.name,
                        "arm": arm.arm_name,
                        "model": arm.model,
                        "include_pattern": arm.include_pattern,
                        "status": "error",
                        "error": broken,
                    }
                )
                continue
            try:
                rows.append(run_arm(man, dirs, ds.name, arm, out_root).row)
            except Exception as exc:  # per-arm isolation
                rows.append(
                    {
                        "dataset": ds.name,
                        "arm": arm.arm_name,
                        "model": arm.model,
                        "include_pattern": arm.include_pattern,
                        "status": "error",
                        "error": f"{type(exc).__name__}: {exc}",
                    }
                )

    report = ExperimentReport(
        rows=rows,
        environment={
            "package": "candlekit",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "master_seed": man.master_seed,
        },
    )
    md, js = render_report(report)
    (out_root / "report.json").write_text(js)
    (out_root / "report.md").write_text(md)
    return report


def _fmt(v: float | None) -> str:
    return "n/a" if v is None else f"{v:.3f}"


def render_report(report: ExperimentReport) -> tuple[str, str]:
    """(markdown, json) renderings; markdown metrics use 3 decimals."""
    lines = ["# Experiment report", ""]
    env = report.environment
    lines.append(
        f"candlekit {env['version']} | python {env['python']} | numpy {env['numpy']} "
        f"| master seed {env['master_seed']}"
    )
    arms = []
    for r in report.rows:
        if r["arm"] not in arms:
            arms.append(r["arm"])
    for arm in arms:
        arm_rows = [r for r in report.rows if r["arm"] == arm]
        head = arm_rows[0]
        lines.append("")
        lines.append(
            f"## Arm `{arm}` ({head['model']}, "
            f"{'with' if head['include_pattern'] else 'without'} pattern stream)"
        )
        lines.append("")
        lines.append("| Dataset | Accuracy | F1 | AUC |")
        lines.append("|---|---|---|---|")
        for r in arm_rows:
            if r["status"] != "ok":
                lines.append(f"| {r['dataset']} | error: {r['error']} | | |")
                continue
            m = r["metrics"]
            lines.append(
                f"| {r['dataset']} | {_fmt(m['accuracy'])} | {_fmt(m['f1'])} | {_fmt(m['auc'])} |"
            )
    lines.append("")
    lines.append("## Sample counts")
    lines.append("")
    lines.append("| Dataset | Arm | n | train/val/test | strong/weak |")
    lines.append("|---|---|---|---|---|")
    for r in report.rows:
        if r["status"] != "ok":
            lines.append(f"| {r['dataset']} | {r['arm']} | - | - | - |")
            continue
        cb = r["class_balance"]
        lines.append(
            f"| {r['dataset']} | {r['arm']} | {r['n_samples']} "
            f"| {r['n_train']}/{r['n_val']}/{r['n_test']} | {cb['strong']}/{cb['weak']} |"
        )
    md = "\n".join(lines) + "\n"
    js = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    return md, js
