"""Annotator reliability filtering, rating aggregation, binarization, contingency test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataio import LabeledClip

FLUIDITY = 0
ENJOYMENT = 1

DEFAULT_R_MIN = 0.2
DEFAULT_THRESHOLD = 2.5
DEFAULT_MIN_ANNOTATORS = 4


@dataclass
class AnnotationSet:
    # (clip_id, annotator_id) -> (fluidity, enjoyment), both in 1..5
    ratings: dict[tuple[str, str], tuple[int, int]]
    reliability_clips: list[str] = field(default_factory=list)

    def __post_init__(self):
        for key, (flu, enj) in self.ratings.items():
            if not (1 <= flu <= 5 and 1 <= enj <= 5):
                raise ValueError(f"rating outside 1..5 for {key}")

    def annotators(self) -> list[str]:
        return sorted({a for _, a in self.ratings})

    def clips(self) -> list[str]:
        return sorted({c for c, _ in self.ratings})


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    """Pearson r, or None when either side has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(xd @ xd) * float(yd @ yd))
    if denom == 0.0:
        return None
    return float(xd @ yd) / denom


def annotator_reliability(annotations: AnnotationSet, annotator_id: str) -> float | None:
    """Pearson r between an annotator's fluidity ratings on the reliability
    clips and the leave-one-out mean of the other annotators' ratings.

    Returns None when either series has zero variance (undefined r).
    """
    own = []
    others_mean = []
    for clip_id in annotations.reliability_clips:
        key = (clip_id, annotator_id)
        if key not in annotations.ratings:
            continue
        others = [
            v[FLUIDITY]
            for (c, a), v in annotations.ratings.items()
            if c == clip_id and a != annotator_id
        ]
        if not others:
            continue
        own.append(annotations.ratings[key][FLUIDITY])
        others_mean.append(sum(others) / len(others))
    if len(own) < 2:
        raise ValueError(
            f"annotator {annotator_id!r} shares only {len(own)} reliability clips; need >= 2"
        )
    return _pearson(np.array(own), np.array(others_mean))


def filter_annotators(annotations: AnnotationSet, r_min: float = DEFAULT_R_MIN) -> AnnotationSet:
    """Keep annotators whose reliability r is defined and strictly above r_min.

    Reliability is always computed against the original pool (no iterative
    re-filtering).  Annotators who cannot be assessed (fewer than two shared
    reliability clips, or zero-variance ratings) are removed.
    """
    keep = set()
    for annotator_id in annotations.annotators():
        try:
            r = annotator_reliability(annotations, annotator_id)
        except ValueError:
            continue
        if r is not None and r > r_min:
            keep.add(annotator_id)
    kept = {key: v for key, v in annotations.ratings.items() if key[1] in keep}
    return AnnotationSet(ratings=kept, reliability_clips=list(annotations.reliability_clips))


def aggregate_and_binarize(
    annotations: AnnotationSet,
    threshold: float = DEFAULT_THRESHOLD,
    min_annotators: int = DEFAULT_MIN_ANNOTATORS,
) -> list[LabeledClip]:
    """Mean ratings per clip and binary labels (1 = low, iff mean < threshold).

    Clips rated by fewer than `min_annotators` annotators are dropped.
    """
    by_clip: dict[str, list[tuple[int, int]]] = {}
    for (clip_id, _), value in annotations.ratings.items():
        by_clip.setdefault(clip_id, []).append(value)
    out = []
    for clip_id in sorted(by_clip):
        values = by_clip[clip_id]
        if len(values) < min_annotators:
            continue
        mean_flu = sum(v[FLUIDITY] for v in values) / len(values)
        mean_enj = sum(v[ENJOYMENT] for v in values) / len(values)
        out.append(
            LabeledClip(
                clip_id=clip_id,
                mean_fluidity=mean_flu,
                mean_enjoyment=mean_enj,
                n_annotators=len(values),
                label_fluidity=int(mean_flu < threshold),
                label_enjoyment=int(mean_enj < threshold),
            )
        )
    return out


def label_contingency_table(clips: list[LabeledClip]) -> list[list[int]]:
    """2x2 counts; rows = enjoyment (high, low), columns = fluidity (high, low)."""
    table = [[0, 0], [0, 0]]
    for c in clips:
        table[c.label_enjoyment][c.label_fluidity] += 1
    return table


def contingency_chi2(table) -> tuple[float, float]:
    """Pearson chi-square with Yates continuity correction on a 2x2 table.

    The correction is capped so a cell is never adjusted past its expected
    count.  Returns (chi2, p) with p from the df=1 survival function.
    """
    obs = np.asarray(table, dtype=np.float64)
    if obs.shape != (2, 2):
        raise ValueError(f"need a 2x2 table, got shape {obs.shape}")
    if (obs < 0).any():
        raise ValueError("cell counts must be non-negative")
    total = obs.sum()
    if total <= 0:
        raise ValueError("table total must be positive")
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    if (rows == 0).any() or (cols == 0).any():
        raise ValueError("zero marginal row or column")
    expected = np.outer(rows, cols) / total
    diff = np.maximum(np.abs(obs - expected) - 0.5, 0.0)
    chi2 = float((diff * diff / expected).sum())
    p = math.erfc(math.sqrt(chi2 / 2.0))  # survival function of chi-square, df = 1
    return chi2, p
