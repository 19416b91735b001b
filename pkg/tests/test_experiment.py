import json

import numpy as np
import pytest

from candlekit.cli import main as cli_main
from candlekit.datasets import (
    assemble_subchart_dataset,
    assemble_training_set,
    image_to_array,
    planted_signal_set,
)
from candlekit.errors import EmptyDataset, ManifestError, SourceNotFound
from candlekit.experiment import (
    build_dataset,
    load_manifest,
    manifest_from_dict,
    render_report,
    run_experiment,
)
from candlekit.raster import read_ppm

BASE_DOC = {
    "master_seed": 42,
    "output_dir": "out",
    "datasets": [
        {"name": "alpha", "synth": {"n": 320, "volatility": 0.02}},
        {"name": "beta", "synth": {"n": 320, "volatility": 0.03}},
        {"name": "merged", "members": ["alpha", "beta"]},
    ],
    "arms": [
        {"arm_name": "with_pattern", "model": "two_stream", "include_pattern": True},
        {"arm_name": "non_pattern", "model": "mini_cnn", "include_pattern": False},
    ],
    "model": {
        "hist_hw": [32, 32],
        "pattern_hw": [16, 16],
        "subchart_hw": [16, 16],
        "block_widths": [4, 8],
        "pattern_widths": [4],
        "fc_dim": 16,
        "latent_dim": 16,
    },
    "train": {"epochs": 1, "batch_size": 32},
}


def manifest(tmp_path, **overrides):
    doc = json.loads(json.dumps(BASE_DOC))
    doc.update(overrides)
    doc["output_dir"] = str(tmp_path / doc["output_dir"])
    return manifest_from_dict(doc, base_dir=tmp_path)


class TestManifest:
    def test_requires_master_seed(self):
        with pytest.raises(ManifestError):
            manifest_from_dict({"datasets": [], "arms": []})

    def test_unique_dataset_names(self, tmp_path):
        doc = {
            "master_seed": 1,
            "datasets": [{"name": "a", "synth": {"n": 50}}, {"name": "a", "synth": {"n": 50}}],
            "arms": [{"arm_name": "x", "model": "mini_cnn"}],
        }
        with pytest.raises(ManifestError):
            manifest_from_dict(doc)

    def test_unknown_merge_member(self):
        doc = {
            "master_seed": 1,
            "datasets": [{"name": "m", "members": ["ghost"]}],
            "arms": [{"arm_name": "x", "model": "mini_cnn"}],
        }
        with pytest.raises(ManifestError):
            manifest_from_dict(doc)

    def test_unknown_arm_model(self):
        doc = {
            "master_seed": 1,
            "datasets": [{"name": "a", "synth": {"n": 50}}],
            "arms": [{"arm_name": "x", "model": "perceptron"}],
        }
        with pytest.raises(ManifestError):
            manifest_from_dict(doc)

    def test_load_from_file_resolves_relative_csv(self, tmp_path):
        (tmp_path / "prices.csv").write_text(
            "Date,Open,High,Low,Close\n2020-01-01,1,2,0.5,1.5\n"
        )
        doc = {
            "master_seed": 1,
            "datasets": [{"name": "file", "csv_path": "prices.csv"}],
            "arms": [{"arm_name": "x", "model": "mini_cnn"}],
        }
        path = tmp_path / "man.json"
        path.write_text(json.dumps(doc))
        man = load_manifest(path)
        assert man.base_dir == tmp_path


class TestBuildDataset:
    def test_constant_series_26_samples(self, tmp_path):
        man = manifest(
            tmp_path,
            datasets=[
                {
                    "name": "flat",
                    "synth": {"n": 60, "drift": 0.0, "volatility": 0.0, "wick_frac": 0.0},
                }
            ],
        )
        ddir = build_dataset(man, "flat")
        rows = [json.loads(l) for l in (ddir / "manifest.jsonl").read_text().splitlines()]
        assert len(rows) == 26
        assert len(list((ddir / "history").glob("*.ppm"))) == 26
        assert len(list((ddir / "pattern").glob("*.ppm"))) == 26
        assert all(r["kind"] == "doji" and r["strength"] == "strong" for r in rows)

    def test_rebuild_is_byte_identical(self, tmp_path):
        man = manifest(tmp_path)
        ddir = build_dataset(man, "alpha")
        before = {p.name: p.read_bytes() for p in sorted(ddir.rglob("*")) if p.is_file()}
        build_dataset(man, "alpha")
        after = {p.name: p.read_bytes() for p in sorted(ddir.rglob("*")) if p.is_file()}
        assert before == after

    def test_too_short_series_is_empty(self, tmp_path):
        man = manifest(tmp_path, datasets=[{"name": "tiny", "synth": {"n": 30}}])
        with pytest.raises(EmptyDataset):
            build_dataset(man, "tiny")

    def test_missing_csv(self, tmp_path):
        man = manifest(tmp_path, datasets=[{"name": "gone", "csv_path": "gone.csv"}])
        with pytest.raises(SourceNotFound):
            build_dataset(man, "gone")

    def test_pattern_images_are_crops(self, tmp_path):
        man = manifest(tmp_path)
        ddir = build_dataset(man, "alpha")
        row = json.loads((ddir / "manifest.jsonl").read_text().splitlines()[0])
        img = read_ppm((ddir / row["pattern_image_path"]).read_bytes())
        spec = man.render_spec
        assert img.width_px == 2 * spec.margin_px + row["span"] * spec.candle_px + (
            row["span"] - 1
        ) * spec.gap_px


class TestAssembly:
    def test_merged_training_set_counts(self, tmp_path):
        man = manifest(tmp_path)
        dirs = [build_dataset(man, "alpha"), build_dataset(man, "beta")]
        single = [assemble_training_set([d], (32, 32), (16, 16), True) for d in dirs]
        merged = assemble_training_set(dirs, (32, 32), (16, 16), True)
        assert len(merged) == len(single[0]) + len(single[1])
        assert merged.member is not None
        assert merged.pattern.shape == (len(merged), 3, 16, 16)
        assert merged.inputs.dtype == np.float32
        assert merged.inputs.max() <= 1.0 and merged.inputs.min() >= 0.0

    def test_subchart_dataset_has_28_crops(self, tmp_path):
        man = manifest(tmp_path)
        ddir = build_dataset(man, "alpha")
        ds = assemble_subchart_dataset([ddir], (16, 16), man.render_spec)
        assert ds.subcharts.shape[1] == 28
        assert ds.subcharts.shape[2:] == (3, 16, 16)

    def test_planted_signal_balanced_and_native_size(self):
        ts = planted_signal_set(n_samples=40, seed=3)
        assert ts.inputs.shape == (40, 3, 32, 32)
        assert ts.labels.mean() == 0.5

    def test_image_to_array_range(self, tmp_path):
        man = manifest(tmp_path)
        ddir = build_dataset(man, "alpha")
        row = json.loads((ddir / "manifest.jsonl").read_text().splitlines()[0])
        arr = image_to_array(read_ppm((ddir / row["history_image_path"]).read_bytes()))
        assert arr.shape[0] == 3 and arr.dtype == np.float32
        assert arr.max() == 1.0  # white background


class TestRunExperiment:
    def test_report_structure_and_isolation(self, tmp_path):
        # "tiny" cannot produce samples; its rows must be errors while the
        # other dataset's arms still succeed
        man = manifest(
            tmp_path,
            datasets=[
                {"name": "alpha", "synth": {"n": 320, "volatility": 0.02}},
                {"name": "tiny", "synth": {"n": 30}},
            ],
        )
        report = run_experiment(man)
        assert len(report.rows) == 4
        by_key = {(r["dataset"], r["arm"]): r for r in report.rows}
        assert by_key[("alpha", "with_pattern")]["status"] == "ok"
        assert by_key[("alpha", "non_pattern")]["status"] == "ok"
        assert by_key[("tiny", "with_pattern")]["status"] == "error"
        assert "EmptyDataset" in by_key[("tiny", "non_pattern")]["error"]
        assert not report.all_ok()

    def test_report_files_written_and_json_round_trips(self, tmp_path):
        man = manifest(tmp_path, datasets=[{"name": "alpha", "synth": {"n": 320}}])
        report = run_experiment(man)
        out = tmp_path / "out"
        doc = json.loads((out / "report.json").read_text())
        assert doc == report.to_dict()
        md, js = render_report(report)
        assert (out / "report.md").read_text() == md
        assert (out / "report.json").read_text() == js

    def test_metrics_formatted_to_three_decimals(self, tmp_path):
        man = manifest(tmp_path, datasets=[{"name": "alpha", "synth": {"n": 320}}])
        run_experiment(man)
        md = (tmp_path / "out" / "report.md").read_text()
        table_lines = [l for l in md.splitlines() if l.startswith("| alpha |")]
        cells = table_lines[0].split("|")[2:5]
        for cell in cells:
            cell = cell.strip()
            assert cell == "n/a" or len(cell.split(".")[1]) == 3


class TestCli:
    def test_detect_emits_jsonl(self, capsys):
        assert cli_main(["detect", "--synth", "60", "--seed", "5"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        first = json.loads(lines[0])
        assert set(first) == {"kind", "end_index", "span", "direction"}

    def test_render_then_decompose(self, tmp_path, capsys):
        out = tmp_path / "chart.ppm"
        assert cli_main(
            ["render", "--synth", "60", "--seed", "5", "--end-index", "40",
             "--window", "30", "--out", str(out)]
        ) == 0
        assert cli_main(
            ["decompose", "--image", str(out), "--out-dir", str(tmp_path / "subs")]
        ) == 0
        assert len(list((tmp_path / "subs").glob("chart.sub*.ppm"))) == 28

    def test_experiment_exit_code_reflects_arm_failures(self, tmp_path):
        doc = json.loads(json.dumps(BASE_DOC))
        doc["datasets"] = [{"name": "tiny", "synth": {"n": 30}}]
        doc["output_dir"] = str(tmp_path / "out")
        man_path = tmp_path / "man.json"
        man_path.write_text(json.dumps(doc))
        assert cli_main(["experiment", "--manifest", str(man_path)]) == 1

    def test_seed_flag_overrides_manifest(self, tmp_path, capsys):
        doc = json.loads(json.dumps(BASE_DOC))
        doc["datasets"] = [{"name": "alpha", "synth": {"n": 320}}]
        doc["output_dir"] = str(tmp_path / "o1")
        man_path = tmp_path / "man.json"
        man_path.write_text(json.dumps(doc))
        assert cli_main(["experiment", "--manifest", str(man_path), "--seed", "7"]) == 0
        env = json.loads((tmp_path / "o1" / "report.json").read_text())["environment"]
        assert env["master_seed"] == 7

    def test_report_subcommand_rerenders(self, tmp_path, capsys):
        doc = json.loads(json.dumps(BASE_DOC))
        doc["datasets"] = [{"name": "alpha", "synth": {"n": 320}}]
        doc["output_dir"] = str(tmp_path / "out")
        man_path = tmp_path / "man.json"
        man_path.write_text(json.dumps(doc))
        cli_main(["experiment", "--manifest", str(man_path)])
        capsys.readouterr()
        assert cli_main(
            ["report", "--report-json", str(tmp_path / "out" / "report.json")]
        ) == 0
        md = capsys.readouterr().out
        assert md == (tmp_path / "out" / "report.md").read_text()
