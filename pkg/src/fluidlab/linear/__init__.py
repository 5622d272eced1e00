"""Binary linear classifier trained by per-sample SGD.

Loss is log_loss or modified_huber on scores w.x + b with labels in
{0, 1}; the penalty (L2 as 0.5*||w||^2, L1 as ||w||_1, both scaled by
alpha) excludes the intercept.  Steps follow eta_t = 1/(alpha*(t0+t)).
Training minimizes the weighted mean loss plus the penalty, with class
weights n/(2*n_c) balancing the label distribution.

Epoch kernels live in _sgd_kernel (compiled) and _sgd_py (NumPy); both
produce identical results up to dot-product rounding, and each is
bit-for-bit deterministic given (X, y, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dataio import FormatError
from . import _backend
from ._sgd_py import (
    LOSS_IDS,
    PENALTY_IDS,
    loss_derivative,
    loss_value,
    penalty_value,
    schedule_t0,
    weighted_objective,
)

LOSSES = ("log_loss", "modified_huber")
PENALTIES = ("l2", "l1")

# Epochs allowed below a tol-sized improvement over the best objective
# before training stops; single-epoch comparisons would quit on step
# noise during the 1/t transient.
PATIENCE = 5

available_backends = _backend.available_backends


def backend_name() -> str:
    return _backend.DEFAULT_NAME


@dataclass(frozen=True)
class SgdConfig:
    loss: str = "log_loss"
    penalty: str = "l2"
    alpha: float = 1e-4
    max_epochs: int = 1000
    tol: float = 1e-3
    seed: int = 0
    class_weight: str = "balanced"

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}, got {self.penalty!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.class_weight != "balanced":
            raise ValueError("only balanced class weights are supported")


@dataclass
class TrainedLinearModel:
    weights: np.ndarray
    intercept: float
    config: SgdConfig
    n_features: int
    n_epochs: int = 0
    backend: str = ""


def class_weights(y) -> dict[int, float]:
    """Balanced weights n / (n_classes * n_c) for binary labels."""
    y = np.asarray(y)
    counts = {c: int((y == c).sum()) for c in (0, 1)}
    if counts[0] + counts[1] != y.size:
        raise ValueError("labels must be 0 or 1")
    if counts[0] == 0 or counts[1] == 0:
        raise ValueError("both classes must be present")
    n = y.size
    return {c: n / (2.0 * counts[c]) for c in (0, 1)}


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return y.astype(np.float64)


def _sample_weights(y, cfg: SgdConfig, sample_weight) -> np.ndarray:
    cw = class_weights(y)
    s = np.where(np.asarray(y) == 1, cw[1], cw[0]).astype(np.float64)
    if sample_weight is not None:
        sw = np.asarray(sample_weight, dtype=np.float64)
        if sw.shape != s.shape:
            raise ValueError("sample_weight length mismatch")
        if not np.isfinite(sw).all() or (sw < 0).any():
            raise ValueError("sample weights must be finite and non-negative")
        s = s * sw
    total = s.sum()
    if total <= 0:
        raise ValueError("sample weights sum to zero")
    # Normalize so a uniformly drawn sample gives an unbiased gradient of
    # the weighted-mean objective.
    return s * (y.size / total)


def fit_linear(X, y, cfg: SgdConfig, sample_weight=None, backend: str | None = None) -> TrainedLinearModel:
    """Train from a zero initial state; deterministic given (X, y, cfg)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d matrix")
    if not np.isfinite(X).all():
        raise ValueError("non-finite feature value")
    y01 = _check_labels(y)
    n, d = X.shape
    if y01.size != n:
        raise ValueError("X and y disagree on the number of samples")
    if n < 2:
        raise ValueError("need at least 2 training samples")
    s = _sample_weights(y01.astype(int), cfg, sample_weight)
    ypm = 2.0 * y01 - 1.0

    name, kernel = _backend.resolve(backend)
    w = np.zeros(d)
    q = np.zeros(d)
    b, u, t = 0.0, 0.0, 0
    t0 = schedule_t0(cfg.loss, cfg.alpha)
    loss_id = LOSS_IDS[cfg.loss]
    penalty_id = PENALTY_IDS[cfg.penalty]
    rng = np.random.default_rng(cfg.seed)

    best = math.inf
    stalled = 0
    n_epochs = cfg.max_epochs
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n).astype(np.intp, copy=False)
        b, u, t = kernel(X, ypm, s, w, b, u, q, order, cfg.alpha, t0, t, loss_id, penalty_id)
        objective = weighted_objective(w, b, X, ypm, s, cfg.alpha, cfg.loss, cfg.penalty)
        if objective > best - cfg.tol:
            stalled += 1
            if stalled >= PATIENCE:
                n_epochs = epoch
                break
        else:
            stalled = 0
        best = min(best, objective)
    if not np.isfinite(w).all() or not math.isfinite(b):
        raise ArithmeticError("SGD diverged to non-finite weights")
    return TrainedLinearModel(
        weights=w, intercept=float(b), config=cfg, n_features=d, n_epochs=n_epochs, backend=name
    )


def decision_scores(model: TrainedLinearModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} features, got shape {X.shape}"
        )
    return X @ model.weights + model.intercept


def predict_proba(model: TrainedLinearModel, X) -> np.ndarray:
    """Probability of class 1; non-decreasing in the decision score."""
    scores = decision_scores(model, X)
    if model.config.loss == "modified_huber":
        return (np.clip(scores, -1.0, 1.0) + 1.0) / 2.0
    out = np.empty_like(scores)
    pos = scores >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-scores[pos]))
    ez = np.exp(scores[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def objective_value(model: TrainedLinearModel, X, y, sample_weight=None, apply_class_weight=True) -> float:
    """Full-batch objective of a model on (X, y), for convergence checks."""
    X = np.asarray(X, dtype=np.float64)
    y01 = _check_labels(y)
    if apply_class_weight:
        cw = class_weights(y01.astype(int))
        s = np.where(y01 == 1.0, cw[1], cw[0])
    else:
        s = np.ones_like(y01)
    if sample_weight is not None:
        s = s * np.asarray(sample_weight, dtype=np.float64)
    cfg = model.config
    return weighted_objective(
        model.weights, model.intercept, X, 2.0 * y01 - 1.0, s, cfg.alpha, cfg.loss, cfg.penalty
    )


# ---------------------------------------------------------------------------
# Serialization: flat text, exact round trip at 17 significant digits


def save_model(model: TrainedLinearModel, path) -> None:
    cfg = model.config
    lines = [
        "fluidlab-linear v1",
        f"loss {cfg.loss}",
        f"penalty {cfg.penalty}",
        f"alpha {cfg.alpha:.17g}",
        f"max_epochs {cfg.max_epochs}",
        f"tol {cfg.tol:.17g}",
        f"seed {cfg.seed}",
        f"class_weight {cfg.class_weight}",
        f"n_features {model.n_features}",
        f"n_epochs {model.n_epochs}",
        f"intercept {model.intercept:.17g}",
        "weights " + " ".join(f"{v:.17g}" for v in model.weights),
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> TrainedLinearModel:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "fluidlab-linear v1":
        raise FormatError(f"{path}: not a linear model file")
    fields = {}
    for ln in lines[1:]:
        key, _, value = ln.partition(" ")
        if not value:
            raise FormatError(f"{path}: malformed line {ln!r}")
        fields[key] = value
    try:
        cfg = SgdConfig(
            loss=fields["loss"],
            penalty=fields["penalty"],
            alpha=float(fields["alpha"]),
            max_epochs=int(fields["max_epochs"]),
            tol=float(fields["tol"]),
            seed=int(fields["seed"]),
            class_weight=fields["class_weight"],
        )
        weights = np.array([float(v) for v in fields["weights"].split()])
        model = TrainedLinearModel(
            weights=weights,
            intercept=float(fields["intercept"]),
            config=cfg,
            n_features=int(fields["n_features"]),
            n_epochs=int(fields["n_epochs"]),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: invalid model file ({exc})") from exc
    if model.weights.size != model.n_features:
        raise FormatError(f"{path}: weight count does not match n_features")
    if not np.isfinite(model.weights).all():
        raise FormatError(f"{path}: non-finite weight")
    return model
