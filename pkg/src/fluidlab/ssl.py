"""Semi-supervised wrappers around the linear classifier.

Four methods: a supervised baseline (sl), self-training, co-training on
an audio view versus a face+text view (cotrain_modality_split), and
co-training on a random half-split of PCA columns
(cotrain_modality_fused).  Pseudo-labeling follows either a confidence
threshold or a k-best rule; every adoption is recorded in a trace so
that leakage and pool growth can be audited after the fact.

Preprocessors are fit once per run on labeled plus unlabeled training
rows (their labels are never used); holdout rows stay outside every fit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import FormatError
from .features import PCA_OFF, FeatureTable, Preprocessor, fit_preprocessor
from .linear import SgdConfig, TrainedLinearModel, fit_linear, predict_proba

METHOD_SL = "sl"
METHOD_SELF = "self_training"
METHOD_COTRAIN_SPLIT = "cotrain_modality_split"
METHOD_COTRAIN_FUSED = "cotrain_modality_fused"
METHODS = (METHOD_SL, METHOD_SELF, METHOD_COTRAIN_SPLIT, METHOD_COTRAIN_FUSED)

CRITERIA = ("threshold", "k_best")

EXHAUSTED_UNLABELED = "exhausted_unlabeled"
NO_CONFIDENT = "no_confident"
MAX_ITERS = "max_iters"
TERMINAL_REASONS = (EXHAUSTED_UNLABELED, NO_CONFIDENT, MAX_ITERS)

# Modality views for the split method: audio against face+text.
SPLIT_VIEW_A = ("audio",)
SPLIT_VIEW_B = ("face", "text")


@dataclass(frozen=True)
class SslConfig:
    method: str = METHOD_SELF
    criterion: str = "threshold"
    threshold: float = 0.8
    k_best: int = 10
    max_iters: int = 10
    seed: int = 0
    base: SgdConfig = field(default_factory=SgdConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be within [0, 1]")
        if self.k_best < 1:
            raise ValueError("k_best must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class IterationRecord:
    adopted: list  # (unlabeled row position, assigned label, confidence)
    skipped: list = field(default_factory=list)  # conflicting nominations


@dataclass
class PseudoLabelTrace:
    iterations: list
    terminal_reason: str
    unlabeled_ids: list | None = None  # caller-supplied ids for leakage audits

    def adopted_positions(self) -> list[int]:
        return [entry[0] for it in self.iterations for entry in it.adopted]

    def n_pseudo_labels(self) -> int:
        return sum(len(it.adopted) for it in self.iterations)


def _confidences(model: TrainedLinearModel, X: np.ndarray):
    """Predicted label and max-class probability per row."""
    p = predict_proba(model, X)
    labels = (p >= 0.5).astype(int)
    return labels, np.where(labels == 1, p, 1.0 - p)


def _select(conf: np.ndarray, cfg: SslConfig) -> np.ndarray:
    if cfg.criterion == "threshold":
        return np.flatnonzero(conf >= cfg.threshold)
    k = min(cfg.k_best, conf.size)
    return np.sort(np.argsort(-conf, kind="stable")[:k])


def self_train(X_lab, y_lab, X_unlab, cfg: SslConfig, unlabeled_ids=None):
    """Iterative pseudo-labeling with a single classifier.

    Returns (model, trace).  Each round fits on the current pool, adopts
    confident unlabeled samples with their predicted labels, and repeats;
    a final refit covers the last adoptions.
    """
    X_lab = np.asarray(X_lab, dtype=np.float64)
    X_unlab = np.asarray(X_unlab, dtype=np.float64)
    pool_X = [X_lab]
    pool_y = [np.asarray(y_lab, dtype=np.int64)]
    remaining = np.arange(X_unlab.shape[0])
    iterations: list[IterationRecord] = []
    reason = MAX_ITERS
    model = None
    stale = True  # pool changed since the last fit
    for _ in range(cfg.max_iters):
        model = fit_linear(np.vstack(pool_X), np.concatenate(pool_y), cfg.base)
        stale = False
        if remaining.size == 0:
            reason = EXHAUSTED_UNLABELED
            break
        labels, conf = _confidences(model, X_unlab[remaining])
        picked = _select(conf, cfg)
        if picked.size == 0:
            reason = NO_CONFIDENT
            break
        rows = remaining[picked]
        iterations.append(
            IterationRecord(
                adopted=[(int(r), int(l), float(c)) for r, l, c in zip(rows, labels[picked], conf[picked])]
            )
        )
        pool_X.append(X_unlab[rows])
        pool_y.append(labels[picked].astype(np.int64))
        remaining = np.delete(remaining, picked)
        stale = True
    if stale:
        model = fit_linear(np.vstack(pool_X), np.concatenate(pool_y), cfg.base)
    return model, PseudoLabelTrace(iterations, reason, _as_list(unlabeled_ids))


def co_train(XA_lab, XB_lab, y_lab, XA_unlab, XB_unlab, cfg: SslConfig, unlabeled_ids=None):
    """Two classifiers on different views nominate pseudo-labels for each
    other.

    A sample nominated by one classifier joins the other's pool with the
    nominator's label; conflicting nominations are skipped for the
    iteration.  Returns ((model_A, model_B), trace); predictions average
    the two probability outputs.
    """
    XA_lab = np.asarray(XA_lab, dtype=np.float64)
    XB_lab = np.asarray(XB_lab, dtype=np.float64)
    XA_unlab = np.asarray(XA_unlab, dtype=np.float64)
    XB_unlab = np.asarray(XB_unlab, dtype=np.float64)
    if XA_lab.shape[0] != XB_lab.shape[0] or XA_unlab.shape[0] != XB_unlab.shape[0]:
        raise ValueError("views disagree on the number of rows")
    y_lab = np.asarray(y_lab, dtype=np.int64)

    pools = {
        "A": {"X": [XA_lab], "y": [y_lab]},
        "B": {"X": [XB_lab], "y": [y_lab]},
    }
    unlab = {"A": XA_unlab, "B": XB_unlab}
    remaining = np.arange(XA_unlab.shape[0])
    iterations: list[IterationRecord] = []
    reason = MAX_ITERS
    models = {"A": None, "B": None}
    stale = True
    for _ in range(cfg.max_iters):
        for side in ("A", "B"):
            models[side] = fit_linear(
                np.vstack(pools[side]["X"]), np.concatenate(pools[side]["y"]), cfg.base
            )
        stale = False
        if remaining.size == 0:
            reason = EXHAUSTED_UNLABELED
            break
        nominated = {}
        for side in ("A", "B"):
            labels, conf = _confidences(models[side], unlab[side][remaining])
            picked = _select(conf, cfg)
            nominated[side] = {
                int(p): (int(labels[p]), float(conf[p])) for p in picked
            }
        conflicts = [
            p
            for p in sorted(set(nominated["A"]) & set(nominated["B"]))
            if nominated["A"][p][0] != nominated["B"][p][0]
        ]
        conflict_set = set(conflicts)
        adopted_entries = []
        adds = {"A": [], "B": []}  # (position, label) joining each pool
        for p in sorted(set(nominated["A"]) | set(nominated["B"])):
            if p in conflict_set:
                continue
            from_a = nominated["A"].get(p)
            from_b = nominated["B"].get(p)
            label = (from_a or from_b)[0]
            conf = max(v[1] for v in (from_a, from_b) if v is not None)
            adopted_entries.append((int(remaining[p]), label, conf))
            if from_a is not None:
                adds["B"].append((p, label))
            if from_b is not None:
                adds["A"].append((p, label))
        if not adopted_entries:
            reason = NO_CONFIDENT
            if conflicts:
                iterations.append(
                    IterationRecord(adopted=[], skipped=[int(remaining[p]) for p in conflicts])
                )
            break
        iterations.append(
            IterationRecord(
                adopted=adopted_entries,
                skipped=[int(remaining[p]) for p in conflicts],
            )
        )
        for side in ("A", "B"):
            if adds[side]:
                pos = np.array([p for p, _ in adds[side]])
                labs = np.array([l for _, l in adds[side]], dtype=np.int64)
                pools[side]["X"].append(unlab[side][remaining[pos]])
                pools[side]["y"].append(labs)
        adopted_pos = np.array(
            sorted((set(nominated["A"]) | set(nominated["B"])) - conflict_set), dtype=int
        )
        remaining = np.delete(remaining, adopted_pos)
        stale = True
    if stale:
        for side in ("A", "B"):
            models[side] = fit_linear(
                np.vstack(pools[side]["X"]), np.concatenate(pools[side]["y"]), cfg.base
            )
    trace = PseudoLabelTrace(iterations, reason, _as_list(unlabeled_ids))
    return (models["A"], models["B"]), trace


def predict_cotrain(models, XA, XB) -> np.ndarray:
    model_a, model_b = models
    return (predict_proba(model_a, XA) + predict_proba(model_b, XB)) / 2.0


def split_views_fused(pc_matrix: np.ndarray, seed: int):
    """Seeded half-split of column indices; the first view takes the
    extra column when the count is odd."""
    d = np.asarray(pc_matrix).shape[1]
    if d < 2:
        raise ValueError("need at least 2 columns to split into views")
    perm = np.random.default_rng(seed).permutation(d)
    half = (d + 1) // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


def split_views_modality(table: FeatureTable):
    """Column groups of the fused layout: audio view and face+text view,
    each including its presence flags."""
    groups = table.column_groups()
    missing = [m for m in SPLIT_VIEW_A + SPLIT_VIEW_B if m not in table.blocks]
    if missing:
        raise ValueError(f"modality blocks absent from the table: {missing}")
    view_a = np.concatenate([groups[m] for m in SPLIT_VIEW_A] + [groups["has_audio"]])
    view_b = np.concatenate(
        [groups[m] for m in SPLIT_VIEW_B] + [groups["has_face"], groups["has_text"]]
    )
    return view_a, view_b


def _as_list(ids):
    return None if ids is None else list(ids)


# ---------------------------------------------------------------------------
# Table-level orchestration: preprocessing + method dispatch


@dataclass
class SslRun:
    config: SslConfig
    retained_variance: object
    models: tuple
    trace: PseudoLabelTrace | None
    preprocessors: dict
    fused_view_cols: tuple | None = None  # PC-column split for the fused method

    def predict(self, table: FeatureTable, rows) -> np.ndarray:
        """Probability of class 1 for the given table rows."""
        method = self.config.method
        if method == METHOD_COTRAIN_SPLIT:
            matrix = table.fused()
            cols_a, cols_b = split_views_modality(table)
            za = self.preprocessors["view_a"].transform(matrix[np.ix_(rows, cols_a)])
            zb = self.preprocessors["view_b"].transform(matrix[np.ix_(rows, cols_b)])
            return predict_cotrain(self.models, za, zb)
        Z = self.preprocessors["fused"].transform(table.fused()[rows])
        if method == METHOD_COTRAIN_FUSED:
            cols_a, cols_b = self.fused_view_cols
            return predict_cotrain(self.models, Z[:, cols_a], Z[:, cols_b])
        return predict_proba(self.models[0], Z)


def fit_ssl(
    table: FeatureTable,
    labeled_rows,
    y_lab,
    unlabeled_rows,
    cfg: SslConfig,
    retained_variance=PCA_OFF,
    unlabeled_ids=None,
) -> SslRun:
    """Preprocess, dispatch to the requested method, and wrap the result.

    Preprocessors are fit on the union of labeled and unlabeled rows;
    `unlabeled_ids` (parallel to `unlabeled_rows`) is stored in the trace
    for leakage audits.
    """
    labeled_rows = np.asarray(labeled_rows, dtype=np.intp)
    unlabeled_rows = np.asarray(unlabeled_rows, dtype=np.intp)
    y_lab = np.asarray(y_lab, dtype=np.int64)
    if labeled_rows.size != y_lab.size:
        raise ValueError("labeled_rows and y_lab disagree on length")
    matrix = table.fused()
    train_rows = np.concatenate([labeled_rows, unlabeled_rows])

    if cfg.method == METHOD_COTRAIN_SPLIT:
        cols_a, cols_b = split_views_modality(table)
        pres = {}
        views_lab = {}
        views_unlab = {}
        for name, cols in (("view_a", cols_a), ("view_b", cols_b)):
            pre = fit_preprocessor(matrix[np.ix_(train_rows, cols)], retained_variance)
            pres[name] = pre
            views_lab[name] = pre.transform(matrix[np.ix_(labeled_rows, cols)])
            views_unlab[name] = pre.transform(matrix[np.ix_(unlabeled_rows, cols)])
        models, trace = co_train(
            views_lab["view_a"],
            views_lab["view_b"],
            y_lab,
            views_unlab["view_a"],
            views_unlab["view_b"],
            cfg,
            unlabeled_ids,
        )
        return SslRun(cfg, retained_variance, models, trace, pres)

    pre = fit_preprocessor(matrix[train_rows], retained_variance)
    Z_lab = pre.transform(matrix[labeled_rows])
    Z_unlab = pre.transform(matrix[unlabeled_rows])
    pres = {"fused": pre}

    if cfg.method == METHOD_SL:
        model = fit_linear(Z_lab, y_lab, cfg.base)
        return SslRun(cfg, retained_variance, (model,), None, pres)
    if cfg.method == METHOD_SELF:
        model, trace = self_train(Z_lab, y_lab, Z_unlab, cfg, unlabeled_ids)
        return SslRun(cfg, retained_variance, (model,), trace, pres)
    # modality-fused co-training on a random PC-column split
    cols_a, cols_b = split_views_fused(Z_lab, cfg.seed)
    models, trace = co_train(
        Z_lab[:, cols_a],
        Z_lab[:, cols_b],
        y_lab,
        Z_unlab[:, cols_a],
        Z_unlab[:, cols_b],
        cfg,
        unlabeled_ids,
    )
    return SslRun(cfg, retained_variance, models, trace, pres, (cols_a, cols_b))


# ---------------------------------------------------------------------------
# Trace serialization (consumed by the CLI's --trace output)


def trace_to_json(trace: PseudoLabelTrace) -> str:
    payload = {
        "iterations": [
            {"adopted": [list(e) for e in it.adopted], "skipped": list(it.skipped)}
            for it in trace.iterations
        ],
        "terminal_reason": trace.terminal_reason,
        "unlabeled_ids": trace.unlabeled_ids,
    }
    return json.dumps(payload, indent=2)


def trace_from_json(text: str) -> PseudoLabelTrace:
    try:
        payload = json.loads(text)
        iterations = [
            IterationRecord(
                adopted=[tuple(e) for e in it["adopted"]],
                skipped=list(it.get("skipped", [])),
            )
            for it in payload["iterations"]
        ]
        reason = payload["terminal_reason"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"invalid trace file: {exc}") from exc
    if reason not in TERMINAL_REASONS:
        raise FormatError(f"invalid terminal reason {reason!r}")
    return PseudoLabelTrace(iterations, reason, payload.get("unlabeled_ids"))


def write_trace(trace: PseudoLabelTrace, path) -> None:
    Path(path).write_text(trace_to_json(trace) + "\n")


def read_trace(path) -> PseudoLabelTrace:
    return trace_from_json(Path(path).read_text())
