"""Command line entry point wiring every pipeline stage.

Subcommands: segment, annotate, featurize, synth, tune, train, sweep,
ablate, report.  Settings resolve as explicit flags, then a JSON config
file (--config), then built-in defaults; the seed additionally falls back
to the FLUIDLAB_SEED environment variable.  Every artifact-producing
command writes a run record (JSON) next to its primary output capturing
the command line, the effective configuration and its digest, input file
digests, library versions, and wall time, so any output can be traced
back to exactly what produced it.

Exit codes: 0 success, 1 invalid input or flags (with a diagnostic),
2 internal error.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    FormatError,
    read_annotations,
    read_embeddings,
    read_labels,
    read_manifest,
    read_results,
    read_session_audio,
    write_labels,
    write_manifest,
    write_results,
)
from .features import AUDIO_FRAME_DIM, assemble_table, read_features, write_features
from .annotation import AnnotationSet, aggregate_and_binarize, filter_annotators
from .segmentation import SegmentationConfig, segment_session
from .ssl import (
    METHOD_COTRAIN_FUSED,
    METHOD_COTRAIN_SPLIT,
    METHOD_SELF,
    METHOD_SL,
    fit_ssl,
    write_trace,
)
from .linear import save_model
from .evaluation import (
    TARGETS,
    build_split_plan,
    build_sweep_data,
    enumerate_combos,
    resolve_params,
    run_combo,
    run_sweep,
    aggregate,
    _ssl_config,
)
from . import synthgen
from . import hpo

# CLI spellings of the training methods.
METHOD_CHOICES = {
    "sl": METHOD_SL,
    "self": METHOD_SELF,
    "cotrain-split": METHOD_COTRAIN_SPLIT,
    "cotrain-fused": METHOD_COTRAIN_FUSED,
}

MODALITY_LETTERS = {"A": "audio", "F": "face", "T": "text"}
ABLATION_GRID = ("A", "F", "T", "A+F", "A+T", "F+T", "A+F+T")


# ---------------------------------------------------------------------------
# Run records


@dataclass
class RunRecord:
    argv: list
    config: dict
    config_digest: str
    seed: int
    versions: dict
    inputs: dict  # path -> sha256
    wall_time: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "argv": self.argv,
                "config": self.config,
                "config_digest": self.config_digest,
                "seed": self.seed,
                "versions": self.versions,
                "inputs": self.inputs,
                "wall_time": self.wall_time,
            },
            indent=2,
            sort_keys=True,
        )


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    out = {
        "fluidlab": __version__,
        "numpy": np.__version__,
        "python": sys.version.split()[0],
    }
    try:
        import matplotlib

        out["matplotlib"] = matplotlib.__version__
    except ImportError:
        pass
    return out


def _record_path(primary_out: Path) -> Path:
    if primary_out.is_dir():
        return primary_out / "run.json"
    return primary_out.with_name(primary_out.name + ".run.json")


def write_run_record(primary_out, argv, config: dict, seed: int, inputs, started: float):
    config = {k: v for k, v in sorted(config.items())}
    digest = hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode()
    ).hexdigest()
    record = RunRecord(
        argv=list(argv),
        config=config,
        config_digest=digest,
        seed=seed,
        versions=_versions(),
        inputs={str(p): _sha256(Path(p)) for p in inputs},
        wall_time=time.time() - started,
    )
    path = _record_path(Path(primary_out))
    with open(path, "w") as fh:
        fh.write(record.to_json() + "\n")
    return path


# ---------------------------------------------------------------------------
# Config resolution


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON config ({exc})") from exc
    if not isinstance(cfg, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    return cfg


def _effective(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults <- config file <- explicitly passed flags."""
    eff = dict(defaults)
    file_cfg = _load_config(getattr(args, "config", None))
    for key, value in file_cfg.items():
        if key not in defaults:
            raise FormatError(
                f"config key {key!r} is not a setting of this command "
                f"(valid: {', '.join(sorted(defaults))})"
            )
        eff[key] = value
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            eff[key] = flag_value
    if "seed" in eff and eff["seed"] is None:
        eff["seed"] = int(os.environ.get("FLUIDLAB_SEED", "0"))
    return eff


def _parse_int_list(text, flag: str) -> list:
    try:
        return [int(tok) for tok in str(text).split(",") if tok != ""]
    except ValueError:
        raise FormatError(f"{flag}: expected comma-separated integers, got {text!r}")


def _subsample_combos(combos, max_combos, seed):
    if max_combos is None or max_combos >= len(combos):
        return combos
    if max_combos <= 0:
        raise FormatError("--max-combos must be positive")
    rng = np.random.default_rng(seed)
    pick = sorted(rng.choice(len(combos), size=max_combos, replace=False))
    return [combos[i] for i in pick]


def _method_list(text) -> list:
    methods = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if tok not in METHOD_CHOICES:
            raise FormatError(
                f"--methods: unknown method {tok!r} "
                f"(valid: {', '.join(METHOD_CHOICES)})"
            )
        methods.append(METHOD_CHOICES[tok])
    return methods


def _target_list(text) -> list:
    targets = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if tok not in TARGETS:
            raise FormatError(f"--targets: unknown target {tok!r} (valid: {', '.join(TARGETS)})")
        targets.append(tok)
    return targets


def _load_params_tables(paths) -> dict:
    table = {}
    for path in paths or []:
        with open(path) as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: invalid params JSON ({exc})") from exc
        cells = payload.get("cells")
        if cells is None:
            raise FormatError(f"{path}: expected a 'cells' list")
        for cell in cells:
            try:
                key = (cell["method"], cell["target"], cell.get("n_labeled"))
                table[key] = dict(cell["params"])
            except (KeyError, TypeError) as exc:
                raise FormatError(f"{path}: malformed cell entry ({exc})") from exc
    return table


def _sweep_inputs(eff) -> tuple:
    table = read_features(eff["features"])
    clips = read_labels(eff["labels"])
    manifest = read_manifest(eff["manifest"])
    data = build_sweep_data(table, clips, manifest)
    sessions = {m.clip_id: m.session_id for m in manifest}
    return data, clips, sessions


# ---------------------------------------------------------------------------
# Command handlers.  Each returns (primary output path, input paths).


def cmd_segment(eff, _args):
    root = Path(eff["audio_dir"])
    if not root.is_dir():
        raise FormatError(f"--audio-dir: {root} is not a directory")
    if sorted(root.glob("*.wav")):
        session_dirs = [root]
    else:
        session_dirs = sorted(d for d in root.iterdir() if d.is_dir() and sorted(d.glob("*.wav")))
    if not session_dirs:
        raise FormatError(f"--audio-dir: no WAV files under {root}")
    cfg = SegmentationConfig(
        rms_threshold=float(eff["rms_threshold"]),
        min_gap=float(eff["min_gap"]),
        frame_len=float(eff["frame_len"]),
        hop=float(eff["hop"]),
    )
    clips = []
    inputs = []
    for d in session_dirs:
        session = read_session_audio(d)
        clips.extend(segment_session(session, cfg))
        inputs.extend(sorted(d.glob("*.wav")))
    write_manifest(clips, eff["out"])
    print(f"wrote {len(clips)} clips from {len(session_dirs)} session(s) to {eff['out']}")
    return eff["out"], inputs


def cmd_annotate(eff, _args):
    ratings = read_annotations(eff["ratings"])
    with open(eff["reliability_clips"]) as fh:
        reliability = [line.strip() for line in fh if line.strip()]
    annotations = AnnotationSet(ratings=ratings, reliability_clips=reliability)
    kept = filter_annotators(annotations)
    labeled = aggregate_and_binarize(kept)
    write_labels(labeled, eff["out"])
    n_dropped = len(annotations.annotators()) - len(kept.annotators())
    print(
        f"wrote {len(labeled)} labeled clips to {eff['out']} "
        f"({n_dropped} unreliable annotator(s) removed)"
    )
    return eff["out"], [eff["ratings"], eff["reliability_clips"]]


def cmd_featurize(eff, _args):
    records = read_embeddings(eff["embeddings"])
    manifest = read_manifest(eff["manifest"])
    clip_ids = [m.clip_id for m in manifest]
    table = assemble_table(records, clip_ids, audio_frame_dim=int(eff["audio_frame_dim"]))
    write_features(table, eff["out"])
    print(f"wrote {table.n_clips} feature rows to {eff['out']}")
    return eff["out"], [eff["embeddings"], eff["manifest"]]


def cmd_synth(eff, _args):
    cfg = synthgen.preset_config(eff["preset"], seed=eff["seed"])
    paths = synthgen.write_dataset(cfg, eff["out"])
    print(
        f"preset {eff['preset']}: wrote "
        + ", ".join(str(p) for p in paths.values())
    )
    return eff["out"], []


def cmd_tune(eff, _args):
    data, clips, sessions = _sweep_inputs(eff)
    method = METHOD_CHOICES[eff["method"]]
    target = eff["target"]
    plan = build_split_plan(clips, sessions, target, int(eff["folds"]), int(eff["seed"]))
    params, objective, history = hpo.tune_cell(
        data,
        plan,
        method,
        target,
        int(eff["n_labeled"]),
        n_trials=int(eff["trials"]),
        seed=int(eff["seed"]),
    )
    payload = {
        "cells": [
            {
                "method": method,
                "target": target,
                "n_labeled": int(eff["n_labeled"]),
                "params": params,
                "objective": objective,
                "n_trials": len(history),
            }
        ]
    }
    with open(eff["out"], "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"best validation AUC {objective:.4f} after {len(history)} trials -> {eff['out']}")
    return eff["out"], [eff["features"], eff["labels"], eff["manifest"]]


def cmd_train(eff, _args):
    data, clips, sessions = _sweep_inputs(eff)
    method = METHOD_CHOICES[eff["method"]]
    target = eff["target"]
    n_labeled = int(eff["labeled_folds"])
    n_folds = int(eff["folds"])
    if not 1 <= n_labeled <= n_folds - 2:
        raise FormatError(
            f"--labeled-folds must be in 1..{n_folds - 2} (got {n_labeled})"
        )
    plan = build_split_plan(clips, sessions, target, n_folds, int(eff["seed"]))
    params_table = _load_params_tables(eff["params"])
    params = resolve_params(params_table, method, target, n_labeled)

    labeled_folds = set(range(n_labeled))
    labeled_ids, unlabeled_ids = [], []
    for cid in data.targeted_ids:
        if plan.fold_of_clip[cid] in labeled_folds:
            labeled_ids.append(cid)
        else:
            unlabeled_ids.append(cid)
    unlabeled_ids += list(data.non_targeted_ids)
    y = np.array([data.y[target][c] for c in labeled_ids])
    cfg, retained = _ssl_config(method, params, int(eff["seed"]))
    run = fit_ssl(
        data.table,
        [data.table._row_of[c] for c in labeled_ids],
        y,
        [data.table._row_of[c] for c in unlabeled_ids],
        cfg,
        retained_variance=retained,
        unlabeled_ids=unlabeled_ids,
    )
    out = Path(eff["out"])
    if len(run.models) == 1:
        primary = out.with_suffix(".model")
        save_model(run.models[0], primary)
        model_note = str(primary)
    else:
        primary = out.with_suffix(".A.model")
        save_model(run.models[0], primary)
        save_model(run.models[1], out.with_suffix(".B.model"))
        model_note = f"{primary} and {out.with_suffix('.B.model')}"
    if run.trace is not None:
        trace_path = out.with_suffix(".trace.json")
        write_trace(run.trace, trace_path)
        trace_note = (
            f"{run.trace.n_pseudo_labels()} pseudo-labels, "
            f"{run.trace.terminal_reason}; trace: {trace_path}"
        )
    else:
        trace_note = "no pseudo-labeling for this method"
    print(
        f"trained {eff['method']} on {len(labeled_ids)} labeled clips "
        f"({trace_note}); model: {model_note}"
    )
    inputs = [eff["features"], eff["labels"], eff["manifest"]] + list(eff["params"] or [])
    return primary, inputs


def cmd_sweep(eff, _args):
    data, clips, sessions = _sweep_inputs(eff)
    methods = _method_list(eff["methods"])
    targets = _target_list(eff["targets"])
    labeled_sizes = (
        None if eff["labeled_sizes"] is None else _parse_int_list(eff["labeled_sizes"], "--labeled-sizes")
    )
    seed = int(eff["seed"])
    combos = enumerate_combos(int(eff["folds"]), int(eff["test_folds"]), labeled_sizes)
    combos = _subsample_combos(combos, eff["max_combos"], seed)
    params_table = _load_params_tables(eff["params"])
    records = []
    for target in targets:
        plan = build_split_plan(clips, sessions, target, int(eff["folds"]), seed)
        records.extend(
            run_sweep(
                data,
                plan,
                combos,
                methods,
                [target],
                params_table=params_table,
                base_seed=seed,
                jobs=int(eff["jobs"]),
            )
        )
    write_results(records, eff["out"])
    print(f"wrote {len(records)} records ({len(combos)} combos) to {eff['out']}")
    inputs = [eff["features"], eff["labels"], eff["manifest"]] + list(eff["params"] or [])
    return eff["out"], inputs


def cmd_ablate(eff, _args):
    data, clips, sessions = _sweep_inputs(eff)
    targets = _target_list(eff["targets"])
    labeled_sizes = (
        None if eff["labeled_sizes"] is None else _parse_int_list(eff["labeled_sizes"], "--labeled-sizes")
    )
    seed = int(eff["seed"])
    combos = enumerate_combos(int(eff["folds"]), int(eff["test_folds"]), labeled_sizes)
    combos = _subsample_combos(combos, eff["max_combos"], seed)
    records = []
    for target in targets:
        plan = build_split_plan(clips, sessions, target, int(eff["folds"]), seed)
        for letters in ABLATION_GRID:
            modalities = [MODALITY_LETTERS[ch] for ch in letters.split("+")]
            label = f"self[{letters}]"
            for combo in combos:
                records.append(
                    run_combo(
                        data,
                        plan,
                        combo,
                        METHOD_SELF,
                        target,
                        {},
                        base_seed=seed,
                        modalities=modalities,
                        method_label=label,
                    )
                )
    write_results(records, eff["out"])
    print(
        f"wrote {len(records)} records ({len(ABLATION_GRID)} modality sets x "
        f"{len(combos)} combos) to {eff['out']}"
    )
    return eff["out"], [eff["features"], eff["labels"], eff["manifest"]]


def _plot_cells(cells, target: str, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    methods = sorted({c.method for c in cells})
    for method in methods:
        points = sorted(
            [c for c in cells if c.method == method], key=lambda c: c.labeled_fraction
        )
        xs = [c.labeled_fraction for c in points]
        ys = [c.roc_auc_mean for c in points]
        errs = [c.roc_auc_se for c in points]
        ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=method)
    ax.set_xlabel("labeled fraction")
    ax.set_ylabel("ROC-AUC (mean ± SE)")
    ax.set_title(target)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_report(eff, _args):
    records = read_results(eff["results"])
    if not records:
        raise FormatError(f"{eff['results']}: no records")
    out = Path(eff["out"])
    out.mkdir(parents=True, exist_ok=True)
    cells = aggregate(records)
    header = [
        "method",
        "target",
        "labeled_fraction",
        "n",
        "roc_auc_mean",
        "roc_auc_se",
        "macro_f1_mean",
        "macro_f1_se",
    ]

    def rows_csv(path, rows):
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for c in rows:
                writer.writerow(
                    [
                        c.method,
                        c.target,
                        f"{c.labeled_fraction:.9g}",
                        c.n,
                        f"{c.roc_auc_mean:.9g}",
                        f"{c.roc_auc_se:.9g}",
                        f"{c.macro_f1_mean:.9g}",
                        f"{c.macro_f1_se:.9g}",
                    ]
                )

    rows_csv(out / "cells.csv", cells)
    for method in sorted({c.method for c in cells}):
        safe = method.replace("[", "_").replace("]", "").replace("+", "")
        rows_csv(out / f"{safe}.csv", [c for c in cells if c.method == method])
    for target in sorted({c.target for c in cells}):
        _plot_cells([c for c in cells if c.target == target], target, out / f"{target}.svg")
    print(f"report with {len(cells)} cells in {out}")
    return out, [eff["results"]]


# ---------------------------------------------------------------------------
# Parser


DEFAULTS = {
    "segment": {
        "audio_dir": None,
        "out": "manifest.jsonl",
        "rms_threshold": 0.05,
        "min_gap": 0.75,
        "frame_len": 0.05,
        "hop": 0.01,
    },
    "annotate": {"ratings": None, "reliability_clips": None, "out": "labels.csv"},
    "featurize": {
        "embeddings": None,
        "manifest": None,
        "out": "features.csv",
        "audio_frame_dim": AUDIO_FRAME_DIM,
    },
    "synth": {"preset": "desk", "out": "data", "seed": None},
    "tune": {
        "features": None,
        "labels": None,
        "manifest": None,
        "method": "self",
        "target": "fluidity",
        "n_labeled": 1,
        "trials": 50,
        "folds": 10,
        "seed": None,
        "out": "params.json",
    },
    "train": {
        "features": None,
        "labels": None,
        "manifest": None,
        "method": "sl",
        "target": "fluidity",
        "labeled_folds": 1,
        "folds": 10,
        "params": None,
        "seed": None,
        "out": "model",
    },
    "sweep": {
        "features": None,
        "labels": None,
        "manifest": None,
        "methods": "sl,self,cotrain-split,cotrain-fused",
        "targets": "fluidity",
        "labeled_sizes": None,
        "folds": 10,
        "test_folds": 2,
        "max_combos": None,
        "jobs": 1,
        "params": None,
        "seed": None,
        "out": "results.csv",
    },
    "ablate": {
        "features": None,
        "labels": None,
        "manifest": None,
        "targets": "fluidity",
        "labeled_sizes": None,
        "folds": 10,
        "test_folds": 2,
        "max_combos": None,
        "seed": None,
        "out": "results.csv",
    },
    "report": {"results": None, "out": "report"},
}

HANDLERS = {
    "segment": cmd_segment,
    "annotate": cmd_annotate,
    "featurize": cmd_featurize,
    "synth": cmd_synth,
    "tune": cmd_tune,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
    "report": cmd_report,
}

REQUIRED = {
    "segment": ("audio_dir",),
    "annotate": ("ratings", "reliability_clips"),
    "featurize": ("embeddings", "manifest"),
    "synth": (),
    "tune": ("features", "labels", "manifest"),
    "train": ("features", "labels", "manifest"),
    "sweep": ("features", "labels", "manifest"),
    "ablate": ("features", "labels", "manifest"),
    "report": ("results",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluidlab",
        description="Detect low-fluidity moments in multi-party conversation recordings.",
    )
    parser.add_argument("--version", action="version", version=f"fluidlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with settings (flags win)")
        return p

    p = add("segment", "detect gaps/overlaps in session audio and write a clip manifest")
    p.add_argument("--audio-dir", dest="audio_dir", help="session directory of <speaker>.wav files, or a root of session directories")
    p.add_argument("--out")
    p.add_argument("--rms-threshold", dest="rms_threshold", type=float)
    p.add_argument("--min-gap", dest="min_gap", type=float)
    p.add_argument("--frame-len", dest="frame_len", type=float)
    p.add_argument("--hop", type=float)

    p = add("annotate", "aggregate ratings into binary labels, dropping unreliable annotators")
    p.add_argument("--ratings", help="annotations.csv (clip_id,annotator_id,fluidity,enjoyment)")
    p.add_argument("--reliability-clips", dest="reliability_clips", help="text file of reliability clip ids, one per line")
    p.add_argument("--out")

    p = add("featurize", "pool embeddings into one fused feature row per clip")
    p.add_argument("--embeddings")
    p.add_argument("--manifest")
    p.add_argument("--audio-frame-dim", dest="audio_frame_dim", type=int)
    p.add_argument("--out")

    p = add("synth", "generate a synthetic dataset (features, manifest, labels)")
    p.add_argument("--preset", choices=sorted(synthgen.PRESETS))
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = add("tune", "search hyperparameters for one (method, target, labeled-size) cell")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--manifest")
    p.add_argument("--method", choices=sorted(METHOD_CHOICES))
    p.add_argument("--target", choices=TARGETS)
    p.add_argument("--n-labeled", dest="n_labeled", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = add("train", "fit one model and write model + pseudo-label trace")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--manifest")
    p.add_argument("--method", choices=sorted(METHOD_CHOICES))
    p.add_argument("--target", choices=TARGETS)
    p.add_argument("--labeled-folds", dest="labeled_folds", type=int, help="number of labeled folds (canonical first k)")
    p.add_argument("--folds", type=int)
    p.add_argument("--params", action="append", help="params.json from tune (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = add("sweep", "score methods over labeled/test fold combinations")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--manifest")
    p.add_argument("--methods", help="comma list: " + ",".join(METHOD_CHOICES))
    p.add_argument("--targets", help="comma list: " + ",".join(TARGETS))
    p.add_argument("--labeled-sizes", dest="labeled_sizes", help="comma list of labeled fold counts")
    p.add_argument("--folds", type=int)
    p.add_argument("--test-folds", dest="test_folds", type=int)
    p.add_argument("--max-combos", dest="max_combos", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--params", action="append")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = add("ablate", "self-training over every modality combination")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--manifest")
    p.add_argument("--targets")
    p.add_argument("--labeled-sizes", dest="labeled_sizes")
    p.add_argument("--folds", type=int)
    p.add_argument("--test-folds", dest="test_folds", type=int)
    p.add_argument("--max-combos", dest="max_combos", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = add("report", "aggregate results.csv into per-cell CSVs and SVG charts")
    p.add_argument("--results")
    p.add_argument("--out")

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_help()
        return 1
    started = time.time()
    try:
        eff = _effective(args, DEFAULTS[args.command])
        for key in REQUIRED[args.command]:
            if eff.get(key) is None:
                flag = "--" + key.replace("_", "-")
                raise FormatError(f"{flag} is required for '{args.command}'")
        primary_out, inputs = HANDLERS[args.command](eff, args)
        seed = int(eff.get("seed") or 0)
        write_run_record(primary_out, sys.argv[1:] if argv is None else argv, eff, seed, inputs, started)
        return 0
    except (FormatError, FileNotFoundError, ValueError) as exc:
        print(f"fluidlab {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # internal error: full traceback, distinct exit code
        import traceback

        traceback.print_exc()
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
