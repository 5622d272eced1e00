"""Group-aware folds, combo enumeration, metrics, sweeps, aggregation.

A split plan maps every labeled clip to one of 10 folds without breaking
up sessions.  A combo picks 2 test folds and a nonempty subset of the
other 8 as labeled; remaining targeted clips plus all non-targeted clips
form the unlabeled pool.  Sweeps score every (combo, method, target)
cell and aggregation reduces records to mean and standard error per
labeled fraction.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataio import NON_TARGETED, LabeledClip, MetricRecord
from .features import PCA_OFF, FeatureTable
from .linear import SgdConfig
from .ssl import METHODS, SslConfig, fit_ssl

TARGETS = ("fluidity", "enjoyment")

DEFAULT_PARAMS = {
    "criterion": "threshold",
    "threshold": 0.8,
    "k_best": 10,
    "max_iters": 10,
    "retained_variance": PCA_OFF,
    "loss": "log_loss",
    "penalty": "l2",
    "alpha": 1e-4,
}


# ---------------------------------------------------------------------------
# Stratified grouped folds


def stratified_group_kfold(labels, groups, n_folds: int = 10, seed: int = 0) -> np.ndarray:
    """Greedy fold assignment keeping groups whole and class mixes close.

    Groups are placed from most to least label-skewed; each placement
    minimizes the total squared deviation, over folds and classes, of
    each fold's share of the class from the uniform 1/n_folds share.
    That balances class mixes and fold sizes together.  Ties break by
    smaller fold then seeded draw.  A final pass moves single groups
    between folds while that lowers the same objective, which undoes the
    lock-in a sequential pass suffers when there are only a few groups
    per fold.  Returns the fold index per input row.
    """
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    if labels.shape != groups.shape:
        raise ValueError("labels and groups disagree on length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    unique = sorted(set(groups.tolist()))
    if len(unique) < n_folds:
        raise ValueError(f"need at least {n_folds} groups, got {len(unique)}")
    counts = {}
    for g in unique:
        mask = groups == g
        counts[g] = np.array([int((labels[mask] == 0).sum()), int((labels[mask] == 1).sum())])
    total = sum(counts.values())
    class_totals = np.maximum(total, 1)  # guard absent classes
    order = sorted(unique, key=lambda g: (-float(np.var(counts[g])), g))

    rng = np.random.default_rng(seed)
    fold_counts = np.zeros((n_folds, 2))
    fold_of_group = {}
    target = 1.0 / n_folds
    for g in order:
        devs = np.empty(n_folds)
        for f in range(n_folds):
            cand = fold_counts.copy()
            cand[f] += counts[g]
            devs[f] = float(np.sum((cand / class_totals - target) ** 2))
        tied = np.flatnonzero(devs <= devs.min() + 1e-12)
        if tied.size > 1:
            sizes = fold_counts[tied].sum(axis=1)
            tied = tied[sizes <= sizes.min()]
        f = int(tied[0]) if tied.size == 1 else int(rng.choice(tied))
        fold_of_group[g] = f
        fold_counts[f] += counts[g]

    # A skewed greedy pass can leave folds empty; repair by moving the
    # smallest group out of the fullest multi-group fold.
    def _members(f):
        return sorted(g for g, ff in fold_of_group.items() if ff == f)

    for f in range(n_folds):
        while not _members(f):
            donors = [
                d for d in range(n_folds) if len(_members(d)) >= 2
            ]
            donor = max(donors, key=lambda d: (fold_counts[d].sum(), -d))
            g = min(_members(donor), key=lambda g: (counts[g].sum(), g))
            fold_of_group[g] = f
            fold_counts[donor] -= counts[g]
            fold_counts[f] += counts[g]

    # Refinement: apply the best single-group move until none improves.
    def _objective(fc):
        return float(np.sum((fc / class_totals - target) ** 2))

    members_per_fold = np.zeros(n_folds, dtype=int)
    for f in fold_of_group.values():
        members_per_fold[f] += 1
    for _ in range(200):
        best = None
        current = _objective(fold_counts)
        for g in order:
            src = fold_of_group[g]
            if members_per_fold[src] < 2:
                continue
            for f in range(n_folds):
                if f == src:
                    continue
                cand = fold_counts.copy()
                cand[src] -= counts[g]
                cand[f] += counts[g]
                gain = current - _objective(cand)
                if gain > 1e-12 and (best is None or gain > best[0] + 1e-12):
                    best = (gain, g, f)
        if best is None:
            break
        _, g, f = best
        members_per_fold[fold_of_group[g]] -= 1
        members_per_fold[f] += 1
        fold_counts[fold_of_group[g]] -= counts[g]
        fold_counts[f] += counts[g]
        fold_of_group[g] = f

    return np.array([fold_of_group[g] for g in groups.tolist()], dtype=int)


@dataclass
class SplitPlan:
    n_folds: int
    fold_of_clip: dict
    groups: dict  # clip_id -> session_id

    def clips_in(self, folds) -> list:
        wanted = set(folds)
        return [cid for cid, f in self.fold_of_clip.items() if f in wanted]


def build_split_plan(clips: list[LabeledClip], sessions: dict, target: str = "fluidity", n_folds: int = 10, seed: int = 0) -> SplitPlan:
    """Fold the labeled clips by session, stratifying on one target."""
    clip_ids = [c.clip_id for c in clips]
    labels = np.array([getattr(c, f"label_{target}") for c in clips])
    groups = np.array([sessions[cid] for cid in clip_ids])
    folds = stratified_group_kfold(labels, groups, n_folds, seed)
    return SplitPlan(
        n_folds=n_folds,
        fold_of_clip=dict(zip(clip_ids, folds.tolist())),
        groups={cid: sessions[cid] for cid in clip_ids},
    )


# ---------------------------------------------------------------------------
# Combo enumeration


@dataclass(frozen=True)
class Combo:
    index: int  # position in the full enumeration, stable across filters
    test_folds: tuple
    labeled_folds: tuple

    @property
    def combo_id(self) -> str:
        test = ".".join(str(f) for f in self.test_folds)
        lab = ".".join(str(f) for f in self.labeled_folds)
        return f"t{test}_l{lab}"


def enumerate_combos(n_folds: int = 10, n_test: int = 2, labeled_sizes=None) -> list[Combo]:
    """Every (test-fold pair, nonempty labeled subset of the rest).

    `labeled_sizes` filters by labeled-fold count without renumbering:
    indices always refer to the full enumeration.
    """
    if n_test >= n_folds:
        raise ValueError("n_test must be smaller than n_folds")
    wanted = None if labeled_sizes is None else set(labeled_sizes)
    combos = []
    index = 0
    for test in itertools.combinations(range(n_folds), n_test):
        rest = [f for f in range(n_folds) if f not in test]
        for k in range(1, len(rest) + 1):
            for lab in itertools.combinations(rest, k):
                if wanted is None or k in wanted:
                    combos.append(Combo(index, test, lab))
                index += 1
    return combos


# ---------------------------------------------------------------------------
# Metrics


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC with tie averaging."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC-AUC needs both classes")
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    new_run = np.r_[True, s[1:] != s[:-1]]
    run_ids = np.cumsum(new_run) - 1
    run_sizes = np.bincount(run_ids)
    ends = np.cumsum(run_sizes)
    avg_rank = (ends - run_sizes + 1 + ends) / 2.0
    ranks = np.empty(labels.size)
    ranks[order] = avg_rank[run_ids]
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def macro_f1(predictions, labels) -> float:
    """Unweighted mean of the per-class F1 scores of binary predictions."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if not np.isin(predictions, (0, 1)).all():
        raise ValueError("predictions must be 0 or 1")
    if not ((labels == 0).any() and (labels == 1).any()):
        raise ValueError("macro F1 needs both classes in the labels")
    scores = []
    for c in (0, 1):
        tp = int(((predictions == c) & (labels == c)).sum())
        fp = int(((predictions == c) & (labels != c)).sum())
        fn = int(((predictions != c) & (labels == c)).sum())
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2.0 * tp / denom)
    return float(np.mean(scores))


# ---------------------------------------------------------------------------
# Sweeps


@dataclass
class SweepData:
    table: FeatureTable
    y: dict  # target -> clip_id -> 0/1
    session_of: dict
    targeted_ids: list
    non_targeted_ids: list


def build_sweep_data(table: FeatureTable, clips: list[LabeledClip], manifest) -> SweepData:
    session_of = {m.clip_id: m.session_id for m in manifest}
    targeted_ids = [c.clip_id for c in clips]
    missing = [cid for cid in targeted_ids if cid not in table._row_of]
    if missing:
        raise ValueError(f"labeled clips missing from features: {missing[:5]}")
    non_targeted = [
        m.clip_id for m in manifest if m.kind == NON_TARGETED and m.clip_id in table._row_of
    ]
    y = {
        "fluidity": {c.clip_id: c.label_fluidity for c in clips},
        "enjoyment": {c.clip_id: c.label_enjoyment for c in clips},
    }
    return SweepData(table, y, session_of, targeted_ids, non_targeted)


def combo_pools(data: SweepData, plan: SplitPlan, combo: Combo):
    """(test ids, labeled ids, unlabeled ids) for one combo.

    Unlabeled = targeted clips of folds that are neither test nor labeled,
    plus every non-targeted clip.
    """
    test_set = set(combo.test_folds)
    labeled_set = set(combo.labeled_folds)
    test_ids, labeled_ids, spare_ids = [], [], []
    for cid in data.targeted_ids:
        fold = plan.fold_of_clip[cid]
        if fold in test_set:
            test_ids.append(cid)
        elif fold in labeled_set:
            labeled_ids.append(cid)
        else:
            spare_ids.append(cid)
    return test_ids, labeled_ids, spare_ids + list(data.non_targeted_ids)


def combo_seed(base_seed: int, combo_index: int) -> int:
    return int(np.random.SeedSequence([base_seed, combo_index]).generate_state(1)[0])


def _ssl_config(method: str, params: dict, seed: int) -> tuple[SslConfig, object]:
    merged = dict(DEFAULT_PARAMS)
    merged.update(params or {})
    base = SgdConfig(
        loss=merged["loss"],
        penalty=merged["penalty"],
        alpha=float(merged["alpha"]),
        seed=seed,
    )
    cfg = SslConfig(
        method=method,
        criterion=merged["criterion"],
        threshold=float(merged["threshold"]),
        k_best=int(merged["k_best"]),
        max_iters=int(merged["max_iters"]),
        seed=seed,
        base=base,
    )
    return cfg, merged["retained_variance"]


def run_combo(
    data: SweepData,
    plan: SplitPlan,
    combo: Combo,
    method: str,
    target: str,
    params: dict,
    base_seed: int = 0,
    modalities=None,
    method_label: str | None = None,
) -> MetricRecord:
    """Fit one method on one combo and score the holdout folds."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}")
    table = data.table if modalities is None else data.table.subset_modalities(list(modalities))
    test_ids, labeled_ids, unlabeled_ids = combo_pools(data, plan, combo)
    seed = combo_seed(base_seed, combo.index)
    cfg, retained = _ssl_config(method, params, seed)
    y_of = data.y[target]
    run = fit_ssl(
        table,
        table.rows(labeled_ids),
        np.array([y_of[c] for c in labeled_ids]),
        table.rows(unlabeled_ids),
        cfg,
        retained,
        unlabeled_ids=unlabeled_ids,
    )
    probs = run.predict(table, table.rows(test_ids))
    y_test = np.array([y_of[c] for c in test_ids])
    return MetricRecord(
        combo_id=combo.combo_id,
        method=method_label or method,
        target=target,
        labeled_fraction=len(combo.labeled_folds) / plan.n_folds,
        roc_auc=roc_auc(probs, y_test),
        macro_f1=macro_f1((probs >= 0.5).astype(int), y_test),
        seed=seed,
    )


def resolve_params(params_table: dict | None, method: str, target: str, n_labeled: int) -> dict:
    """Look up tuned parameters, falling back to target-wide then empty."""
    if not params_table:
        return {}
    for key in ((method, target, n_labeled), (method, target, None)):
        if key in params_table:
            return params_table[key]
    return {}


_POOL_STATE: dict = {}


def _pool_init(data, plan, params_table, base_seed):
    _POOL_STATE["args"] = (data, plan, params_table, base_seed)


def _pool_task(item):
    combo, method, target = item
    data, plan, params_table, base_seed = _POOL_STATE["args"]
    params = resolve_params(params_table, method, target, len(combo.labeled_folds))
    return run_combo(data, plan, combo, method, target, params, base_seed)


def run_sweep(
    data: SweepData,
    plan: SplitPlan,
    combos: list[Combo],
    methods,
    targets,
    params_table: dict | None = None,
    base_seed: int = 0,
    jobs: int = 1,
) -> list[MetricRecord]:
    """Score every (combo, method, target); record order is canonical and
    independent of the worker count."""
    work = [(c, m, t) for c in combos for m in methods for t in targets]
    if jobs <= 1:
        _pool_init(data, plan, params_table, base_seed)
        return [_pool_task(item) for item in work]
    with ProcessPoolExecutor(
        max_workers=jobs,
        initializer=_pool_init,
        initargs=(data, plan, params_table, base_seed),
    ) as pool:
        return list(pool.map(_pool_task, work, chunksize=8))


# ---------------------------------------------------------------------------
# Aggregation


@dataclass(frozen=True)
class CellSummary:
    method: str
    target: str
    labeled_fraction: float
    n: int
    roc_auc_mean: float
    roc_auc_se: float
    macro_f1_mean: float
    macro_f1_se: float
    degenerate: bool  # single-record cell, SE reported as 0


def aggregate(records: list[MetricRecord]) -> list[CellSummary]:
    """Mean and standard error per (method, target, labeled_fraction)."""
    if not records:
        raise ValueError("no records to aggregate")
    cells = {}
    for r in records:
        cells.setdefault((r.method, r.target, r.labeled_fraction), []).append(r)
    out = []
    for (method, target, frac), rs in sorted(cells.items()):
        auc = np.array([r.roc_auc for r in rs])
        f1 = np.array([r.macro_f1 for r in rs])
        n = len(rs)
        if n == 1:
            se_auc = se_f1 = 0.0
        else:
            se_auc = float(auc.std(ddof=1) / np.sqrt(n))
            se_f1 = float(f1.std(ddof=1) / np.sqrt(n))
        out.append(
            CellSummary(
                method=method,
                target=target,
                labeled_fraction=frac,
                n=n,
                roc_auc_mean=float(auc.mean()),
                roc_auc_se=se_auc,
                macro_f1_mean=float(f1.mean()),
                macro_f1_se=se_f1,
                degenerate=n == 1,
            )
        )
    return out
