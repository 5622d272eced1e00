"""Hyperparameter search: random startup, then tree-structured Parzen
estimator suggestions.

The space mirrors the sweep's knobs: PCA off or a retained fraction in
[0.2, 1.0], loss, penalty, alpha (log scale), pseudo-label criterion and
threshold.  TPE splits past trials at the gamma quantile of the
objective (maximized), fits per-dimension densities over the good and
bad sets, draws candidates from the good densities, and returns the one
with the largest good/bad density ratio.  Everything is deterministic
given (history, space, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evaluation import roc_auc
from .linear import SgdConfig
from .ssl import SslConfig, fit_ssl

N_STARTUP = 10
N_CANDIDATES = 24
GAMMA = 0.25

COMPLETE = "complete"
FAILED = "failed"


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float
    log: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("lower bound must be below upper bound")
        if self.log and self.lo <= 0:
            raise ValueError("log-uniform bounds must be positive")

    def to_internal(self, x: float) -> float:
        return math.log(x) if self.log else x

    def from_internal(self, t: float) -> float:
        x = math.exp(t) if self.log else t
        return min(max(x, self.lo), self.hi)

    def sample(self, rng) -> float:
        t = rng.uniform(self.to_internal(self.lo), self.to_internal(self.hi))
        return self.from_internal(t)


@dataclass(frozen=True)
class Categorical:
    choices: tuple

    def sample(self, rng):
        return self.choices[int(rng.integers(len(self.choices)))]


def default_space() -> dict:
    """The tuning space; `pca_value` is inert when `pca_mode` is off."""
    return {
        "pca_mode": Categorical(("off", "on")),
        "pca_value": Uniform(0.2, 1.0),
        "loss": Categorical(("log_loss", "modified_huber")),
        "penalty": Categorical(("l2", "l1")),
        "alpha": Uniform(1e-5, 1e-2, log=True),
        "criterion": Categorical(("threshold", "k_best")),
        "threshold": Uniform(0.0, 1.0),
    }


def to_run_params(assignment: dict) -> dict:
    """Convert a space assignment into sweep-facing parameters."""
    params = {
        "loss": assignment["loss"],
        "penalty": assignment["penalty"],
        "alpha": assignment["alpha"],
        "criterion": assignment["criterion"],
        "threshold": assignment["threshold"],
    }
    params["retained_variance"] = (
        "off" if assignment["pca_mode"] == "off" else assignment["pca_value"]
    )
    return params


@dataclass
class Trial:
    params: dict  # space assignment
    objective: float | None
    state: str


def _random_assignment(space: dict, rng) -> dict:
    return {name: dim.sample(rng) for name, dim in space.items()}


def _silverman(centers: np.ndarray, spread: float) -> float:
    """Bandwidth with a floor so degenerate samples stay proper."""
    n = len(centers)
    sigma = float(centers.std(ddof=1)) if n >= 2 else 0.0
    if sigma <= 0:
        sigma = spread / 4.0
    return max(0.9 * sigma * n ** (-0.2), spread * 1e-3)


class _NumericDensity:
    """Gaussian kernel mixture in the dimension's internal coordinates.

    One kernel per observed value plus a wide component spanning the
    whole range.  The wide component keeps the tails alive when the
    observations pile up in one spot, which otherwise traps the
    sampler on whatever cluster formed first.  The kernel bandwidth is
    shared between the good and bad densities (computed by the caller
    from the pooled sample) so their ratio stays comparable where the
    two overlap.
    """

    def __init__(self, dim: Uniform, values, bandwidth: float):
        self.dim = dim
        lo = dim.to_internal(dim.lo)
        hi = dim.to_internal(dim.hi)
        spread = hi - lo
        data = np.array([dim.to_internal(v) for v in values])
        self.centers = np.append(data, 0.5 * (lo + hi))
        self.widths = np.append(np.full(len(data), bandwidth), spread)

    def sample(self, rng) -> float:
        i = int(rng.integers(len(self.centers)))
        t = rng.normal(self.centers[i], self.widths[i])
        return self.dim.from_internal(t)

    def pdf(self, value: float) -> float:
        t = self.dim.to_internal(value)
        z = (t - self.centers) / self.widths
        dens = np.exp(-0.5 * z * z) / (self.widths * math.sqrt(2.0 * math.pi))
        return float(dens.mean())


class _CategoricalDensity:
    """Laplace-smoothed choice frequencies."""

    def __init__(self, dim: Categorical, values):
        counts = {c: 1.0 for c in dim.choices}
        for v in values:
            counts[v] += 1.0
        total = sum(counts.values())
        self.dim = dim
        self.probs = {c: counts[c] / total for c in dim.choices}

    def sample(self, rng):
        p = np.array([self.probs[c] for c in self.dim.choices])
        return self.dim.choices[int(rng.choice(len(p), p=p))]

    def pdf(self, value) -> float:
        return self.probs[value]


def _fit_densities(space: dict, good: list[dict], bad: list[dict]):
    """Per-dimension densities for the good and bad halves of history."""
    gout, bout = {}, {}
    for name, dim in space.items():
        gvals = [a[name] for a in good]
        bvals = [a[name] for a in bad]
        if isinstance(dim, Categorical):
            gout[name] = _CategoricalDensity(dim, gvals)
            bout[name] = _CategoricalDensity(dim, bvals)
        else:
            spread = dim.to_internal(dim.hi) - dim.to_internal(dim.lo)
            pooled = np.array([dim.to_internal(v) for v in gvals + bvals])
            h = _silverman(pooled, spread)
            gout[name] = _NumericDensity(dim, gvals, h)
            bout[name] = _NumericDensity(dim, bvals, h)
    return gout, bout


def suggest(history: list[Trial], space: dict, seed: int) -> dict:
    """Next assignment to evaluate.

    Random while fewer than N_STARTUP trials exist (or fewer than 2
    completed ones); TPE afterwards.  The draw depends only on
    (history length, completed trials, space, seed).
    """
    rng = np.random.default_rng([seed, len(history)])
    complete = [t for t in history if t.state == COMPLETE]
    if len(history) < N_STARTUP or len(complete) < 2:
        return _random_assignment(space, rng)

    ranked = sorted(
        range(len(complete)), key=lambda i: (-complete[i].objective, i)
    )
    n_good = math.ceil(GAMMA * len(complete))
    good = [complete[i].params for i in ranked[:n_good]]
    bad = [complete[i].params for i in ranked[n_good:]]
    good_density, bad_density = _fit_densities(space, good, bad)

    best_assignment = None
    best_ratio = -math.inf
    for _ in range(N_CANDIDATES):
        candidate = {name: good_density[name].sample(rng) for name in space}
        num = 1.0
        den = 1.0
        for name in space:
            num *= good_density[name].pdf(candidate[name])
            den *= bad_density[name].pdf(candidate[name])
        ratio = num / (den + 1e-300)
        if ratio > best_ratio:
            best_ratio = ratio
            best_assignment = candidate
    return best_assignment


def optimize(evaluator, space: dict, n_trials: int, seed: int):
    """Run `n_trials` suggestions through `evaluator(run_params) -> float`.

    Evaluator exceptions mark the trial failed and the loop continues.
    Returns (best trial, history); ties go to the earliest trial.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    history: list[Trial] = []
    for _ in range(n_trials):
        assignment = suggest(history, space, seed)
        try:
            value = float(evaluator(to_run_params(assignment)))
            history.append(Trial(assignment, value, COMPLETE))
        except Exception:
            history.append(Trial(assignment, None, FAILED))
    complete = [t for t in history if t.state == COMPLETE]
    if not complete:
        raise RuntimeError("every trial failed; nothing to return")
    best = max(complete, key=lambda t: t.objective)
    return best, history


# ---------------------------------------------------------------------------
# The tuning protocol: one study per (method, target, labeled-fold-count)


def _tuning_context(data, plan, n_labeled: int):
    """Labeled/validation/unlabeled clip ids for a cell's inner split.

    The cell trains on the canonical first `n_labeled` folds.  With two
    or more labeled folds the last one is the validation set; with one,
    the caller repeats seeded 80/20 splits of that fold.
    """
    if not 1 <= n_labeled <= plan.n_folds:
        raise ValueError("labeled fold count out of range")
    labeled_folds = list(range(n_labeled))
    by_fold = {f: [] for f in range(plan.n_folds)}
    for cid in data.targeted_ids:
        by_fold[plan.fold_of_clip[cid]].append(cid)
    outside = [cid for f in range(n_labeled, plan.n_folds) for cid in by_fold[f]]
    unlabeled = outside + list(data.non_targeted_ids)
    if n_labeled >= 2:
        train = [cid for f in labeled_folds[:-1] for cid in by_fold[f]]
        val = by_fold[labeled_folds[-1]]
        return train, val, unlabeled
    return by_fold[0], None, unlabeled


def make_cell_evaluator(data, plan, method: str, target: str, n_labeled: int, seed: int):
    """Objective: validation ROC-AUC of the method under given params."""
    from .evaluation import DEFAULT_PARAMS  # avoid cycle at import time

    train_ids, val_ids, unlabeled_ids = _tuning_context(data, plan, n_labeled)
    y_of = data.y[target]

    def _run(params, fit_ids, score_ids):
        merged = dict(DEFAULT_PARAMS)
        merged.update(params)
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
        run = fit_ssl(
            data.table,
            data.table.rows(fit_ids),
            np.array([y_of[c] for c in fit_ids]),
            data.table.rows(unlabeled_ids),
            cfg,
            merged["retained_variance"],
            unlabeled_ids=unlabeled_ids,
        )
        probs = run.predict(data.table, data.table.rows(score_ids))
        return roc_auc(probs, np.array([y_of[c] for c in score_ids]))

    if val_ids is not None:
        return lambda params: _run(params, train_ids, val_ids)

    def evaluate(params):
        # Single labeled fold: average five seeded 80/20 clip splits,
        # stratified so the validation side keeps both classes whenever
        # the fold has both.
        pos = [c for c in train_ids if y_of[c] == 1]
        neg = [c for c in train_ids if y_of[c] == 0]
        if not pos or not neg:
            raise ValueError("labeled fold has a single class; cannot validate")
        scores = []
        for rep in range(5):
            rng = np.random.default_rng([seed, rep])
            val, fit = [], []
            for group in (pos, neg):
                perm = rng.permutation(len(group))
                cut = max(1, int(round(0.2 * len(group))))
                val.extend(group[i] for i in perm[:cut])
                fit.extend(group[i] for i in perm[cut:])
            scores.append(_run(params, fit, val))
        return float(np.mean(scores))

    return evaluate


def tune_cell(data, plan, method: str, target: str, n_labeled: int, n_trials: int, seed: int):
    """Search one cell; returns (best run params, best objective, history)."""
    evaluator = make_cell_evaluator(data, plan, method, target, n_labeled, seed)
    best, history = optimize(evaluator, default_space(), n_trials, seed)
    return to_run_params(best.params), best.objective, history
