"""Reference SGD epoch kernel and the shared loss/objective math.

The compiled kernel in `_sgd_kernel` mirrors `run_epoch` operation for
operation; the two differ only in floating-point summation order inside
the dot products.  Everything else in this file (losses, schedule,
objective) is backend-independent and used by both.
"""

from __future__ import annotations

import math

import numpy as np

LOSS_IDS = {"log_loss": 0, "modified_huber": 1}
PENALTY_IDS = {"l2": 0, "l1": 1}


# ---------------------------------------------------------------------------
# Losses on the margin z = score * y, with y in {-1, +1}


def loss_value(loss: str, score, y):
    """Per-sample loss; `score` and `y` may be scalars or arrays."""
    z = np.asarray(score, dtype=np.float64) * np.asarray(y, dtype=np.float64)
    if loss == "log_loss":
        return np.logaddexp(0.0, -z)
    if loss == "modified_huber":
        quad = np.square(np.clip(1.0 - z, 0.0, None))
        return np.where(z < -1.0, -4.0 * z, np.where(z < 1.0, quad, 0.0))
    raise ValueError(f"unknown loss {loss!r}")


def loss_derivative(loss: str, score: float, y: float) -> float:
    """d loss / d score at one sample."""
    z = score * y
    if loss == "log_loss":
        if z > 18.0:
            return -y * math.exp(-z)
        if z < -18.0:
            return -y
        return -y / (math.exp(z) + 1.0)
    if loss == "modified_huber":
        if z >= 1.0:
            return 0.0
        if z >= -1.0:
            return 2.0 * (z - 1.0) * y
        return -4.0 * y
    raise ValueError(f"unknown loss {loss!r}")


def penalty_value(penalty: str, w: np.ndarray) -> float:
    if penalty == "l2":
        return 0.5 * float(np.dot(w, w))
    if penalty == "l1":
        return float(np.abs(w).sum())
    raise ValueError(f"unknown penalty {penalty!r}")


def schedule_t0(loss: str, alpha: float) -> float:
    """Offset for eta_t = 1/(alpha*(t0+t)).

    The first step size eta0 = typw / max(1, |dloss(-typw, 1)|) keeps the
    initial update near the typical weight scale typw = (1/alpha)^(1/4).
    """
    typw = math.sqrt(1.0 / math.sqrt(alpha))
    eta0 = typw / max(1.0, abs(loss_derivative(loss, -typw, 1.0)))
    return 1.0 / (eta0 * alpha)


def weighted_objective(
    w: np.ndarray,
    b: float,
    X: np.ndarray,
    y_pm: np.ndarray,
    s: np.ndarray,
    alpha: float,
    loss: str,
    penalty: str,
) -> float:
    """Full-batch objective: weighted mean loss plus alpha * penalty."""
    scores = X @ w + b
    data = float(np.dot(s, loss_value(loss, scores, y_pm)) / s.sum())
    return data + alpha * penalty_value(penalty, w)


# ---------------------------------------------------------------------------
# One epoch of per-sample updates


def run_epoch(X, y, s, w, b, u, q, order, alpha, t0, t, loss_id, penalty_id):
    """Visit samples in `order`, updating (w, b) in place; returns (b, u, t).

    `u` is the accumulated maximum L1 penalty per weight and `q` the
    penalty each weight has actually absorbed; clipping at the zero
    crossing keeps exact sparsity (cumulative truncated gradient).
    """
    loss = "log_loss" if loss_id == 0 else "modified_huber"
    for i in order:
        eta = 1.0 / (alpha * (t0 + t))
        p = float(np.dot(X[i], w)) + b
        g = loss_derivative(loss, p, float(y[i]))
        c = eta * s[i] * g
        if penalty_id == 0:
            w *= 1.0 - eta * alpha
            w -= c * X[i]
        else:
            u += eta * alpha
            wl = w - c * X[i]
            wt = wl.copy()
            pos = wl > 0.0
            neg = wl < 0.0
            wt[pos] = np.maximum(0.0, wl[pos] - (u + q[pos]))
            wt[neg] = np.minimum(0.0, wl[neg] + (u - q[neg]))
            q += wt - wl
            w[:] = wt
        b -= c
        t += 1
    return b, u, t
