"""Command-line pipeline: gen -> train -> extract -> evaluate / verify,
plus the standalone distance grid and a report regenerator.

Every stage reads its inputs from the output directory and writes its
artifacts back there, so stages can rerun independently and a finished
artifact is never recomputed (delete it to force a redo).  All randomness
derives from one master seed, making a full rerun byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from ._util import derive_rng, derive_seed, write_text_atomic
from .automata import (
    NEGATIVE,
    POSITIVE,
    dataset_from_csv,
    dataset_to_csv,
    generate_dataset,
    load_dfa,
    save_dfa,
    split_dataset,
    tomita_dfa,
)
from .evaluation import (
    TrialResult,
    accuracy,
    fidelity,
    inject_label_noise,
    summaries_to_csv,
    summarize_sweep,
    trials_to_csv,
)
from .extraction import ExtractionConfig, extract_dfa
from .metrics import distance_grid, distance_reports_to_csv
from .rnn import TrainConfig, balance_hidden_sizes, load_model, new_model, save_model, train
from .verification import SamplingExhausted, length_sweep, verify_model

DEFAULT_CONFIG = {
    "out_dir": "runs/default",
    "master_seed": 7,
    "grammars": [1, 2, 3, 4, 5, 6, 7],
    "cells": ["elman", "second_order", "mi_rnn", "gru", "lstm"],
    "dataset": {
        "min_length": 1,
        "max_length": 14,
        "max_per_class": 250,
        "train_fraction": 0.8,
    },
    "train": {
        "target_params": 326,
        "learning_rate": 0.05,
        "momentum": 0.9,
        "max_epochs": 500,
        "batch_size": 32,
        "target_test_accuracy": 1.0,
        "grad_clip": 5.0,
    },
    "extraction": {
        "k_min": 3,
        "k_max": 15,
        "hidden_seeds": 10,
        "restarts": 5,
        "kmeans_max_iters": 100,
    },
    "noise": {"n_pos": 2, "n_neg": 2, "fidelity_k": 20},
    "verification": {
        "length": 200,
        "count": 100,
        "trials": 30,
        "radius": 1,
        "grammars": [3, 4, 7],
        "lengths": [],
    },
    "distance": {"lengths": [8, 10, 12, 14], "ops": "substitution"},
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(args) -> dict:
    cfg = DEFAULT_CONFIG
    if args.config:
        with open(args.config) as fh:
            cfg = _deep_merge(cfg, json.load(fh))
    # flags override file values
    if getattr(args, "out", None):
        cfg = _deep_merge(cfg, {"out_dir": args.out})
    if getattr(args, "seed", None) is not None:
        cfg = _deep_merge(cfg, {"master_seed": args.seed})
    if getattr(args, "grammars", None):
        cfg = _deep_merge(cfg, {"grammars": _parse_int_list(args.grammars)})
    if getattr(args, "cells", None):
        cfg = _deep_merge(cfg, {"cells": args.cells.split(",")})
    return cfg


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _paths(cfg: dict) -> dict:
    out = cfg["out_dir"]
    return {
        "out": out,
        "datasets": os.path.join(out, "datasets"),
        "checkpoints": os.path.join(out, "checkpoints"),
        "logs": os.path.join(out, "logs"),
        "dfas": os.path.join(out, "dfas"),
        "reports": os.path.join(out, "reports"),
    }


def _ensure_dirs(paths: dict, *names: str) -> None:
    for n in names:
        os.makedirs(paths[n], exist_ok=True)


def _dataset_path(paths, g):
    return os.path.join(paths["datasets"], f"g{g}.csv")


def _checkpoint_stem(g, cell, seed_index, noisy=False):
    prefix = "noisy__" if noisy else ""
    return f"{prefix}g{g}__{cell}__s{seed_index}"


def _fail_usage(message: str):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(2)


def _require(path: str, hint: str):
    if not os.path.exists(path):
        _fail_usage(f"missing {path}; run '{hint}' first")


def _load_dataset(paths, g):
    path = _dataset_path(paths, g)
    _require(path, "rnnverify gen")
    return dataset_from_csv(path, grammar_id=g)


def _hidden_sizes(cfg) -> dict:
    return balance_hidden_sizes(cfg["train"]["target_params"], cfg["cells"])


def _train_config(cfg, seed: int) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        learning_rate=t["learning_rate"],
        momentum=t["momentum"],
        max_epochs=t["max_epochs"],
        batch_size=t["batch_size"],
        seed=seed,
        target_test_accuracy=t["target_test_accuracy"],
        grad_clip=t["grad_clip"],
    )


# ---------------------------------------------------------------------------
# stages


def cmd_gen(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg)
    _ensure_dirs(paths, "out", "datasets")
    d = cfg["dataset"]
    manifest = {}
    for g in cfg["grammars"]:
        path = _dataset_path(paths, g)
        if os.path.exists(path) and not args.force:
            print(f"datasets: g{g} exists, skipping")
            dataset = dataset_from_csv(path, grammar_id=g)
        else:
            dataset = generate_dataset(
                g,
                d["min_length"],
                d["max_length"],
                d["max_per_class"],
                seed=derive_seed(cfg["master_seed"], "data", g),
            )
            dataset = split_dataset(
                dataset,
                d["train_fraction"],
                seed=derive_seed(cfg["master_seed"], "split", g),
            )
            dataset_to_csv(dataset, path)
            print(f"datasets: wrote g{g} ({len(dataset)} strings)")
        manifest[f"g{g}"] = {
            "total": len(dataset),
            "train": dataset.class_counts("train"),
            "test": dataset.class_counts("test"),
        }
    write_text_atomic(
        os.path.join(paths["datasets"], "manifest.json"),
        json.dumps(manifest, indent=1, sort_keys=True) + "\n",
    )
    write_text_atomic(
        os.path.join(paths["out"], "config.json"),
        json.dumps(cfg, indent=1, sort_keys=True) + "\n",
    )
    return 0


def _train_one(cfg, paths, g, cell, seed_index, hidden, noisy: bool):
    stem = _checkpoint_stem(g, cell, seed_index, noisy)
    ckpt = os.path.join(paths["checkpoints"], stem + ".json")
    if os.path.exists(ckpt):
        print(f"train: {stem} exists, skipping")
        return
    dataset = _load_dataset(paths, g)
    if noisy:
        n = cfg["noise"]
        dataset = inject_label_noise(
            dataset,
            n["n_pos"],
            n["n_neg"],
            seed=derive_seed(cfg["master_seed"], "noise", g),
        )
    model = new_model(
        cell, hidden, seed=derive_seed(cfg["master_seed"], "init", g, cell, seed_index)
    )
    tcfg = _train_config(cfg, derive_seed(cfg["master_seed"], "shuffle", g, cell, seed_index))
    model, log = train(model, dataset, tcfg)
    save_model(model, ckpt)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "loss", "train_accuracy", "test_accuracy"])
    for i in range(log.epochs_run):
        writer.writerow(
            [i, f"{log.losses[i]:.6f}", f"{log.train_accuracy[i]:.6f}",
             f"{log.test_accuracy[i]:.6f}"]
        )
    write_text_atomic(os.path.join(paths["logs"], stem + ".csv"), buf.getvalue())
    flag = "" if log.reached_target else "  [below target]"
    print(
        f"train: {stem} epochs={log.epochs_run} "
        f"test={log.test_accuracy[-1]:.3f}{flag}"
    )


def cmd_train(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg)
    _ensure_dirs(paths, "checkpoints", "logs")
    hidden = _hidden_sizes(cfg)
    n_seeds = args.seeds if args.seeds is not None else cfg["extraction"]["hidden_seeds"]
    for g in cfg["grammars"]:
        for cell in cfg["cells"]:
            for i in range(n_seeds):
                _train_one(cfg, paths, g, cell, i, hidden[cell], noisy=args.noisy)
    return 0


def cmd_extract(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg)
    _ensure_dirs(paths, "dfas")
    e = cfg["extraction"]
    ks = _parse_int_list(args.k) if args.k else list(range(e["k_min"], e["k_max"] + 1))
    n_seeds = args.seeds if args.seeds is not None else e["hidden_seeds"]
    for g in cfg["grammars"]:
        dataset = _load_dataset(paths, g)
        for cell in cfg["cells"]:
            for i in range(n_seeds):
                stem = _checkpoint_stem(g, cell, i)
                ckpt = os.path.join(paths["checkpoints"], stem + ".json")
                _require(ckpt, "rnnverify train")
                model = load_model(ckpt)
                for k in ks:
                    out_stem = f"{stem}__k{k}"
                    dfa_path = os.path.join(paths["dfas"], out_stem + ".txt")
                    if os.path.exists(dfa_path):
                        print(f"extract: {out_stem} exists, skipping")
                        continue
                    ecfg = ExtractionConfig(
                        k=k,
                        kmeans_seed=derive_seed(cfg["master_seed"], "kmeans", g, cell, i, k),
                        kmeans_max_iters=e["kmeans_max_iters"],
                        restarts=e["restarts"],
                    )
                    extracted = extract_dfa(model, dataset, ecfg)
                    save_dfa(extracted.dfa, dfa_path)
                    sidecar = dict(extracted.provenance)
                    sidecar["checkpoint"] = stem + ".json"
                    sidecar["states"] = extracted.dfa.num_states
                    sidecar["seed_index"] = i
                    write_text_atomic(
                        os.path.join(paths["dfas"], out_stem + ".provenance.json"),
                        json.dumps(sidecar, indent=1, sort_keys=True) + "\n",
                    )
                    print(
                        f"extract: {out_stem} states={extracted.dfa.num_states}"
                    )
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg)
    _ensure_dirs(paths, "reports")
    if args.fidelity_noise:
        return _evaluate_noise_fidelity(cfg, paths)

    sidecars = sorted(
        f for f in os.listdir(paths["dfas"]) if f.endswith(".provenance.json")
    ) if os.path.isdir(paths["dfas"]) else []
    if not sidecars:
        _fail_usage("no extracted DFAs found; run 'rnnverify extract' first")

    trials = []
    datasets = {}
    models = {}
    for sc in sidecars:
        with open(os.path.join(paths["dfas"], sc)) as fh:
            prov = json.load(fh)
        g = prov["grammar"]
        if g not in cfg["grammars"]:
            continue
        if prov["cell"] not in cfg["cells"]:
            continue
        if g not in datasets:
            datasets[g] = _load_dataset(paths, g)
        dataset = datasets[g]
        ckpt = prov["checkpoint"]
        if ckpt not in models:
            models[ckpt] = load_model(os.path.join(paths["checkpoints"], ckpt))
        model = models[ckpt]
        dfa = load_dfa(os.path.join(paths["dfas"], sc.replace(".provenance.json", ".txt")))
        test_strings = [w for w, _ in dataset.test_samples()]
        dfa_acc = accuracy(dfa, dataset, "test")
        trials.append(
            TrialResult(
                grammar_id=g,
                cell_kind=prov["cell"],
                hidden_size=prov["hidden_size"],
                k=prov["k"],
                model_seed=prov["model_seed"],
                kmeans_seed=prov["kmeans_seed"],
                dfa_states=prov["states"],
                dfa_accuracy=dfa_acc,
                rnn_test_accuracy=accuracy(model, dataset, "test"),
                fidelity=fidelity(dfa, model, test_strings),
                success=dfa_acc == 1.0,
            )
        )
    trials_to_csv(trials, os.path.join(paths["reports"], "trials.csv"))
    summaries = summarize_sweep(trials)
    summaries_to_csv(summaries, os.path.join(paths["reports"], "summary.csv"))
    for s in summaries:
        print(
            f"evaluate: g{s.grammar_id} {s.cell_kind}: "
            f"acc {s.mean_dfa_accuracy:.3f} (var {s.var_dfa_accuracy:.4f}) "
            f"success {s.success_rate:.2f} fidelity {s.mean_fidelity:.3f} "
            f"[{s.n_trials} trials]"
        )
    return 0


def _evaluate_noise_fidelity(cfg, paths) -> int:
    """Fidelity of DFAs extracted from models trained on label-noised data."""
    rows = []
    k = cfg["noise"]["fidelity_k"]
    for g in cfg["grammars"]:
        dataset = _load_dataset(paths, g)
        noisy_dataset = inject_label_noise(
            dataset,
            cfg["noise"]["n_pos"],
            cfg["noise"]["n_neg"],
            seed=derive_seed(cfg["master_seed"], "noise", g),
        )
        for cell in cfg["cells"]:
            stem = _checkpoint_stem(g, cell, 0, noisy=True)
            ckpt = os.path.join(paths["checkpoints"], stem + ".json")
            _require(ckpt, "rnnverify train --noisy")
            model = load_model(ckpt)
            ecfg = ExtractionConfig(
                k=k,
                kmeans_seed=derive_seed(cfg["master_seed"], "kmeans-noise", g, cell),
                kmeans_max_iters=cfg["extraction"]["kmeans_max_iters"],
                restarts=cfg["extraction"]["restarts"],
            )
            test_strings = [w for w, _ in dataset.test_samples()]
            try:
                extracted = extract_dfa(model, noisy_dataset, ecfg)
                fid = fidelity(extracted.dfa, model, test_strings)
                err = ""
            except Exception as e:
                fid = float("nan")
                err = f"{type(e).__name__}: {e}"
            rows.append(
                {
                    "grammar": g,
                    "cell": cell,
                    "k": k,
                    "noisy_test_accuracy": accuracy(model, dataset, "test"),
                    "fidelity": fid,
                    "error": err,
                }
            )
            print(
                f"evaluate: noise fidelity g{g} {cell}: "
                f"{fid:.3f}" + (f" ({err})" if err else "")
            )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["grammar", "cell", "k", "noisy_test_accuracy", "fidelity", "error"])
    for r in rows:
        writer.writerow(
            [r["grammar"], r["cell"], r["k"],
             f"{r['noisy_test_accuracy']:.6f}", f"{r['fidelity']:.6f}", r["error"]]
        )
    write_text_atomic(os.path.join(paths["reports"], "fidelity.csv"), buf.getvalue())
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg)
    _ensure_dirs(paths, "reports")
    v = cfg["verification"]
    grammars = (
        _parse_int_list(args.grammars) if args.grammars else v["grammars"]
    )
    length = args.length if args.length is not None else v["length"]
    count = args.count if args.count is not None else v["count"]
    trials = args.trials if args.trials is not None else v["trials"]
    radius = args.radius if args.radius is not None else v["radius"]

    rows = []
    witness_rows = []
    for g in grammars:
        oracle = tomita_dfa(g)
        for cell in cfg["cells"]:
            stem = _checkpoint_stem(g, cell, args.seed_index)
            ckpt = os.path.join(paths["checkpoints"], stem + ".json")
            _require(ckpt, "rnnverify train")
            model = load_model(ckpt)
            try:
                report = verify_model(
                    model,
                    oracle,
                    length=length,
                    count=count,
                    n_trials=trials,
                    radius=radius,
                    seed=derive_seed(cfg["master_seed"], "verify", g, cell),
                )
            except SamplingExhausted as e:
                print(f"verify: g{g} {cell}: {e}")
                rows.append((g, cell, length, -1, "error", float("nan")))
                continue
            trial_counter = {POSITIVE: 0, NEGATIVE: 0}
            for t in report.trials:
                idx = trial_counter[t.label]
                trial_counter[t.label] += 1
                word = "positive" if t.label == POSITIVE else "negative"
                rows.append((g, cell, t.length, idx, word, t.gamma))
                for center, perturbed in t.witnesses:
                    witness_rows.append((g, cell, t.length, idx, word, center, perturbed))
            print(
                f"verify: g{g} {cell} N={length}: "
                f"gamma_pos={report.gamma_pos:.4f} gamma_neg={report.gamma_neg:.4f} "
                f"({len(witness_rows)} witnesses so far)"
            )

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["grammar", "cell", "N", "trial", "label", "gamma"])
    for g, cell, n, idx, word, gamma in rows:
        writer.writerow([g, cell, n, idx, word, f"{gamma:.6f}"])
    write_text_atomic(os.path.join(paths["reports"], "verification.csv"), buf.getvalue())

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["grammar", "cell", "N", "trial", "label", "center", "perturbed"])
    for row in witness_rows:
        writer.writerow(row)
    write_text_atomic(os.path.join(paths["reports"], "witnesses.csv"), buf.getvalue())

    if v["lengths"] or args.lengths:
        lengths = _parse_int_list(args.lengths) if args.lengths else v["lengths"]
        sweep_rows = []
        for g in grammars:
            oracle = tomita_dfa(g)
            for cell in cfg["cells"]:
                stem = _checkpoint_stem(g, cell, args.seed_index)
                model = load_model(os.path.join(paths["checkpoints"], stem + ".json"))
                for r in length_sweep(
                    model, oracle, lengths, count, radius,
                    seed=derive_seed(cfg["master_seed"], "lsweep", g, cell),
                ):
                    word = "positive" if r["label"] == POSITIVE else "negative"
                    sweep_rows.append(
                        (g, cell, r["length"], word, f"{r['gamma']:.6f}", r["error"])
                    )
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["grammar", "cell", "N", "label", "gamma", "error"])
        for row in sweep_rows:
            writer.writerow(row)
        write_text_atomic(
            os.path.join(paths["reports"], "length_sweep.csv"), buf.getvalue()
        )
    return 0


def cmd_distance(args) -> int:
    cfg = load_config(args)
    paths = _paths(cfg)
    _ensure_dirs(paths, "reports")
    lengths = (
        _parse_int_list(args.lengths) if args.lengths else cfg["distance"]["lengths"]
    )
    ops = args.ops or cfg["distance"]["ops"]
    reports = distance_grid(cfg["grammars"], lengths, ops=ops)
    distance_reports_to_csv(reports, os.path.join(paths["reports"], "distance.csv"))
    header = "grammar " + " ".join(f"N={n}" for n in lengths)
    print(header)
    for g in cfg["grammars"]:
        cells = []
        for n in lengths:
            match = [r for r in reports if r.grammar_id == g and r.length == n]
            cells.append(f"{match[0].d_avg:.2f}" if match else "  - ")
        print(f"{g:>7} " + " ".join(f"{c:>5}" for c in cells))
    return 0


def cmd_report(args) -> int:
    """Regenerate summary.csv from trials.csv and print the report tables."""
    cfg = load_config(args)
    paths = _paths(cfg)
    trials_path = os.path.join(paths["reports"], "trials.csv")
    if os.path.exists(trials_path):
        trials = []
        with open(trials_path, newline="") as fh:
            for row in csv.DictReader(fh):
                trials.append(
                    TrialResult(
                        grammar_id=int(row["grammar"]),
                        cell_kind=row["cell"],
                        hidden_size=int(row["hidden"]),
                        k=int(row["k"]),
                        model_seed=int(row["model_seed"]),
                        kmeans_seed=int(row["kmeans_seed"]),
                        dfa_states=int(row["dfa_states"]),
                        dfa_accuracy=float(row["dfa_accuracy"]),
                        rnn_test_accuracy=float(row["rnn_test_accuracy"]),
                        fidelity=float(row["fidelity"]),
                        success=row["success"] == "1",
                        error=row["error"] or None,
                    )
                )
        summaries = summarize_sweep(trials)
        summaries_to_csv(summaries, os.path.join(paths["reports"], "summary.csv"))
        print(f"report: summary.csv rebuilt from {len(trials)} trials")
        for s in summaries:
            print(
                f"  g{s.grammar_id} {s.cell_kind}: acc {s.mean_dfa_accuracy:.3f} "
                f"success {s.success_rate:.2f} fidelity {s.mean_fidelity:.3f}"
            )
    ver_path = os.path.join(paths["reports"], "verification.csv")
    if os.path.exists(ver_path):
        gammas: dict[tuple, list[float]] = {}
        with open(ver_path, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["label"] == "error":
                    continue
                key = (row["grammar"], row["cell"], row["label"])
                gammas.setdefault(key, []).append(float(row["gamma"]))
        print("report: mean adversarial accuracy")
        for (g, cell, label), vals in sorted(gammas.items()):
            print(f"  g{g} {cell} {label}: {float(np.mean(vals)):.4f}")
    if not os.path.exists(trials_path) and not os.path.exists(ver_path):
        _fail_usage("nothing to report; run 'rnnverify evaluate' or 'rnnverify verify' first")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rnnverify",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (overrides defaults)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--grammars", help="comma-separated grammar ids")
        p.add_argument("--cells", help="comma-separated cell kinds")

    p = sub.add_parser("gen", help="generate and split the grammar datasets")
    common(p)
    p.add_argument("--force", action="store_true", help="regenerate existing datasets")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train RNN checkpoints")
    common(p)
    p.add_argument("--seeds", type=int, help="number of hidden-init seeds")
    p.add_argument("--noisy", action="store_true",
                   help="train on the label-noised variant of each dataset")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="extract DFAs from trained checkpoints")
    common(p)
    p.add_argument("--k", help="comma-separated cluster counts (default: config range)")
    p.add_argument("--seeds", type=int, help="number of hidden-init seeds")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="score extracted DFAs into trials.csv/summary.csv")
    common(p)
    p.add_argument("--fidelity-noise", action="store_true",
                   help="score fidelity of extractions from noisy-trained models")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify", help="adversarial robustness against the grammar oracle")
    common(p)
    p.add_argument("--length", type=int, help="string length N")
    p.add_argument("--count", type=int, help="strings per class per trial")
    p.add_argument("--trials", type=int, help="number of trials")
    p.add_argument("--radius", type=int, help="edit ball radius")
    p.add_argument("--lengths", help="comma-separated N values for a length sweep")
    p.add_argument("--seed-index", type=int, default=0,
                   help="which trained seed's checkpoint to verify")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("distance", help="per-length grammar complexity grid")
    common(p)
    p.add_argument("--lengths", help="comma-separated lengths")
    p.add_argument("--ops", choices=["substitution", "levenshtein"])
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("report", help="rebuild summaries from raw report files")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
