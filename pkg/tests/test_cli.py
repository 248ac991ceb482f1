"""End-to-end tests of the command-line pipeline on a tiny configuration:
artifact layout, resume semantics, exit codes, config merging, and
byte-identical reruns."""

import contextlib
import csv
import hashlib
import io
import json
import os
import shutil

import pytest

from rnnverify import cli
from rnnverify.cli import DEFAULT_CONFIG, _deep_merge, build_parser, load_config, main

TINY = {
    "master_seed": 11,
    "grammars": [1],
    "cells": ["second_order"],
    "dataset": {"min_length": 1, "max_length": 8, "max_per_class": 40},
    "train": {"max_epochs": 80},
    "extraction": {"k_min": 4, "k_max": 5, "hidden_seeds": 1},
    "verification": {"grammars": [1], "length": 16, "count": 10, "trials": 2},
    "distance": {"lengths": [6, 8]},
}


def write_config(dirpath, out_dir):
    cfg = dict(TINY)
    cfg["out_dir"] = str(out_dir)
    path = os.path.join(dirpath, "config.json")
    with open(path, "w") as fh:
        json.dump(cfg, fh)
    return path


def run(argv):
    """Run one subcommand, capturing stdout; failures raise SystemExit."""
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        rc = main(argv)
    assert rc == 0
    return buf.getvalue()


def run_pipeline(cfg_path):
    out = {}
    for stage in ("gen", "train", "extract", "evaluate", "verify", "distance", "report"):
        out[stage] = run([stage, "--config", cfg_path])
    return out


def hash_tree(root):
    hashes = {}
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            full = os.path.join(dirpath, name)
            rel = os.path.relpath(full, root)
            with open(full, "rb") as fh:
                hashes[rel] = hashlib.sha256(fh.read()).hexdigest()
    return hashes


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    out_dir = base / "run"
    cfg_path = write_config(str(base), out_dir)
    stdout = run_pipeline(cfg_path)
    return {"out": str(out_dir), "cfg": cfg_path, "stdout": stdout}


class TestArtifacts:
    def test_gen_layout(self, pipeline):
        out = pipeline["out"]
        assert os.path.exists(os.path.join(out, "datasets", "g1.csv"))
        with open(os.path.join(out, "datasets", "manifest.json")) as fh:
            manifest = json.load(fh)
        assert "g1" in manifest and manifest["g1"]["total"] > 0
        with open(os.path.join(out, "config.json")) as fh:
            stored = json.load(fh)
        assert stored["master_seed"] == 11
        assert stored["train"]["max_epochs"] == 80
        # untouched defaults survive the merge
        assert stored["train"]["momentum"] == DEFAULT_CONFIG["train"]["momentum"]

    def test_train_artifacts(self, pipeline):
        out = pipeline["out"]
        ckpt = os.path.join(out, "checkpoints", "g1__second_order__s0.json")
        assert os.path.exists(ckpt)
        log = os.path.join(out, "logs", "g1__second_order__s0.csv")
        with open(log, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows and float(rows[-1]["test_accuracy"]) == 1.0

    def test_extract_artifacts(self, pipeline):
        out = pipeline["out"]
        for k in (4, 5):
            stem = f"g1__second_order__s0__k{k}"
            assert os.path.exists(os.path.join(out, "dfas", stem + ".txt"))
            with open(os.path.join(out, "dfas", stem + ".provenance.json")) as fh:
                prov = json.load(fh)
            assert prov["grammar"] == 1
            assert prov["k"] == k
            assert prov["checkpoint"] == "g1__second_order__s0.json"
            assert prov["seed_index"] == 0

    def test_evaluate_reports(self, pipeline):
        out = pipeline["out"]
        with open(os.path.join(out, "reports", "trials.csv"), newline="") as fh:
            trials = list(csv.DictReader(fh))
        assert len(trials) == 2  # one per K
        assert {t["k"] for t in trials} == {"4", "5"}
        with open(os.path.join(out, "reports", "summary.csv"), newline="") as fh:
            summary = list(csv.DictReader(fh))
        assert len(summary) == 1
        assert summary[0]["grammar"] == "1" and summary[0]["n_trials"] == "2"

    def test_verify_reports(self, pipeline):
        out = pipeline["out"]
        with open(os.path.join(out, "reports", "verification.csv"), newline="") as fh:
            rows = list(csv.DictReader(fh))
        # 2 trials x 2 labels for the single (grammar, cell) pair
        assert len(rows) == 4
        assert {r["label"] for r in rows} == {"positive", "negative"}
        assert all(r["N"] == "16" for r in rows)
        for r in rows:
            assert 0.0 <= float(r["gamma"]) <= 1.0
        assert os.path.exists(os.path.join(out, "reports", "witnesses.csv"))

    def test_distance_grid(self, pipeline):
        out = pipeline["out"]
        with open(os.path.join(out, "reports", "distance.csv"), newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [(r["grammar"], r["N"]) for r in rows] == [("1", "6"), ("1", "8")]
        by_n = {r["N"]: float(r["d_avg"]) for r in rows}
        assert by_n["8"] == pytest.approx(2.5078, abs=5e-4)
        assert "2.51" in pipeline["stdout"]["distance"]

    def test_report_rebuilds_summary(self, pipeline):
        text = pipeline["stdout"]["report"]
        assert "summary.csv rebuilt from 2 trials" in text
        assert "mean adversarial accuracy" in text


class TestResume:
    def test_second_run_skips_everything(self, pipeline):
        cfg = pipeline["cfg"]
        ckpt = os.path.join(pipeline["out"], "checkpoints", "g1__second_order__s0.json")
        with open(ckpt, "rb") as fh:
            before = fh.read()
        assert "exists, skipping" in run(["gen", "--config", cfg])
        assert "exists, skipping" in run(["train", "--config", cfg])
        assert "exists, skipping" in run(["extract", "--config", cfg])
        with open(ckpt, "rb") as fh:
            assert fh.read() == before

    def test_gen_force_regenerates(self, pipeline, tmp_path):
        # force on a copy, not on the shared fixture directory
        out2 = tmp_path / "copy"
        shutil.copytree(pipeline["out"], out2)
        cfg_path = write_config(str(tmp_path), out2)
        text = run(["gen", "--config", cfg_path, "--force"])
        assert "wrote g1" in text


class TestExitCodes:
    def test_train_without_datasets(self, tmp_path, capsys):
        cfg_path = write_config(str(tmp_path), tmp_path / "empty")
        with pytest.raises(SystemExit) as exc:
            main(["train", "--config", cfg_path])
        assert exc.value.code == 2
        assert "rnnverify gen" in capsys.readouterr().err

    def test_evaluate_without_extractions(self, tmp_path, capsys):
        cfg_path = write_config(str(tmp_path), tmp_path / "empty")
        with pytest.raises(SystemExit) as exc:
            main(["evaluate", "--config", cfg_path])
        assert exc.value.code == 2
        assert "extract" in capsys.readouterr().err

    def test_report_with_nothing(self, tmp_path, capsys):
        cfg_path = write_config(str(tmp_path), tmp_path / "empty")
        with pytest.raises(SystemExit) as exc:
            main(["report", "--config", cfg_path])
        assert exc.value.code == 2
        assert "nothing to report" in capsys.readouterr().err

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_no_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2


class TestConfig:
    def test_deep_merge_nested(self):
        base = {"a": {"x": 1, "y": 2}, "b": 3}
        override = {"a": {"y": 20}, "c": 4}
        merged = _deep_merge(base, override)
        assert merged == {"a": {"x": 1, "y": 20}, "b": 3, "c": 4}
        assert base == {"a": {"x": 1, "y": 2}, "b": 3}  # inputs untouched

    def test_flags_override_file(self, tmp_path):
        cfg_path = write_config(str(tmp_path), tmp_path / "run")
        args = build_parser().parse_args(
            ["gen", "--config", cfg_path, "--seed", "99",
             "--grammars", "2,3", "--cells", "gru,lstm"]
        )
        cfg = load_config(args)
        assert cfg["master_seed"] == 99
        assert cfg["grammars"] == [2, 3]
        assert cfg["cells"] == ["gru", "lstm"]
        # file values not named by flags still apply
        assert cfg["train"]["max_epochs"] == 80

    def test_defaults_not_mutated(self, tmp_path):
        snapshot = json.dumps(DEFAULT_CONFIG, sort_keys=True)
        cfg_path = write_config(str(tmp_path), tmp_path / "run")
        args = build_parser().parse_args(["gen", "--config", cfg_path, "--seed", "99"])
        load_config(args)
        assert json.dumps(cli.DEFAULT_CONFIG, sort_keys=True) == snapshot


class TestReproducibility:
    def test_rerun_is_byte_identical(self, tmp_path):
        out_dir = tmp_path / "run"
        cfg_path = write_config(str(tmp_path), out_dir)
        run_pipeline(cfg_path)
        first = hash_tree(str(out_dir))
        shutil.rmtree(str(out_dir))
        run_pipeline(cfg_path)
        second = hash_tree(str(out_dir))
        assert first == second
        assert len(first) >= 10  # datasets, checkpoint, logs, dfas, reports
