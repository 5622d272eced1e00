"""Per-clip feature assembly: modality pooling, fusion, standardization, PCA.

Fused layout (reference configuration): audio 128 | face 34 | text 384,
followed by one presence flag per modality.  A missing modality contributes
a zero block with its flag set to 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dataio import MODALITIES, EmbeddingRecord, FormatError, format_float

REFERENCE_DIMS = {"audio": 128, "face": 34, "text": 384}
AUDIO_FRAME_DIM = 128

PCA_OFF = "off"


# ---------------------------------------------------------------------------
# Pooling


def pool_audio(frames: np.ndarray) -> np.ndarray:
    """Mean over the clip's frame embeddings; accepts (k, d) or flat (k*d,)."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 1:
        frames = frames[None, :]
    if frames.size == 0:
        raise ValueError("no audio frames to pool")
    return frames.mean(axis=0)


def pool_face(series_per_participant: list[np.ndarray]) -> np.ndarray:
    """Per action unit mean and std over time, then mean over participants.

    Each participant series is (n_frames, n_aus); the result is
    (2 * n_aus,) laid out as all means followed by all stds.
    """
    if not series_per_participant:
        raise ValueError("no participant series to pool")
    pooled = []
    n_aus = None
    for series in series_per_participant:
        series = np.asarray(series, dtype=np.float64)
        if series.ndim != 2 or series.shape[0] == 0:
            raise ValueError("participant series must be a non-empty (frames, AUs) array")
        if n_aus is None:
            n_aus = series.shape[1]
        elif series.shape[1] != n_aus:
            raise ValueError("participants disagree on the number of action units")
        pooled.append(np.concatenate([series.mean(axis=0), series.std(axis=0)]))
    return np.mean(pooled, axis=0)


def pool_clip(
    audio_frames: np.ndarray | None,
    face_series: list[np.ndarray] | None,
    text_vector: np.ndarray | None,
    dims: dict[str, int] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Fuse one clip's modalities into (vector, presence flags).

    `dims` gives the per-modality output widths used to zero-fill missing
    modalities; it defaults to the reference configuration.
    """
    dims = dict(REFERENCE_DIMS if dims is None else dims)
    blocks = []
    presence = []
    if audio_frames is not None and np.size(audio_frames) > 0:
        block = pool_audio(audio_frames)
        presence.append(1.0)
    else:
        block = np.zeros(dims["audio"])
        presence.append(0.0)
    blocks.append(block)
    if face_series:
        blocks.append(pool_face(face_series))
        presence.append(1.0)
    else:
        blocks.append(np.zeros(dims["face"]))
        presence.append(0.0)
    if text_vector is not None and np.size(text_vector) > 0:
        blocks.append(np.asarray(text_vector, dtype=np.float64))
        presence.append(1.0)
    else:
        blocks.append(np.zeros(dims["text"]))
        presence.append(0.0)
    if not any(presence):
        raise ValueError("all modalities missing for clip")
    return np.concatenate(blocks), np.array(presence)


# ---------------------------------------------------------------------------
# Feature tables


@dataclass
class FeatureTable:
    clip_ids: list[str]
    blocks: dict[str, np.ndarray]  # modality -> (n_clips, dim)
    presence: np.ndarray  # (n_clips, 3) flags in audio/face/text order

    def __post_init__(self):
        n = len(self.clip_ids)
        for modality, block in self.blocks.items():
            if block.shape[0] != n:
                raise ValueError(f"{modality} block has {block.shape[0]} rows, expected {n}")
        self._row_of = {cid: i for i, cid in enumerate(self.clip_ids)}
        if len(self._row_of) != n:
            raise ValueError("duplicate clip_id in feature table")

    @property
    def n_clips(self) -> int:
        return len(self.clip_ids)

    def dims(self) -> dict[str, int]:
        return {m: b.shape[1] for m, b in self.blocks.items()}

    def fused(self) -> np.ndarray:
        """Concatenation audio | face | text | presence flags."""
        parts = [self.blocks[m] for m in MODALITIES if m in self.blocks]
        return np.hstack(parts + [self.presence])

    def column_groups(self) -> dict[str, np.ndarray]:
        """Column indices of each block (and its flag) within fused()."""
        groups = {}
        offset = 0
        order = [m for m in MODALITIES if m in self.blocks]
        for m in order:
            width = self.blocks[m].shape[1]
            groups[m] = np.arange(offset, offset + width)
            offset += width
        for i, m in enumerate(MODALITIES):
            groups[f"has_{m}"] = np.array([offset + i])
        return groups

    def rows(self, clip_ids: list[str]) -> np.ndarray:
        missing = [c for c in clip_ids if c not in self._row_of]
        if missing:
            raise KeyError(f"clips absent from feature table: {missing[:5]}")
        return np.array([self._row_of[c] for c in clip_ids], dtype=np.intp)

    def subset_modalities(self, modalities: list[str]) -> "FeatureTable":
        """Restrict to a subset of modality blocks (for the ablation grid)."""
        unknown = [m for m in modalities if m not in self.blocks]
        if unknown:
            raise ValueError(f"unknown modalities {unknown}")
        order = [m for m in MODALITIES if m in modalities]
        keep = [MODALITIES.index(m) for m in order]
        return FeatureTable(
            clip_ids=list(self.clip_ids),
            blocks={m: self.blocks[m] for m in order},
            presence=self.presence[:, keep],
        )


def assemble_table(
    records: list[EmbeddingRecord],
    clip_ids: list[str],
    audio_frame_dim: int = AUDIO_FRAME_DIM,
) -> FeatureTable:
    """Pool embedding rows into one fused feature row per clip.

    Audio rows: one row per frame, or a single row holding the concatenated
    frames (width a multiple of `audio_frame_dim`).  Face rows: one per
    participant (already time-pooled to mean|std).  Text: exactly one row.
    Clips without any row for a modality get a zero block and flag 0.
    """
    by_clip: dict[str, dict[str, list[np.ndarray]]] = {}
    dims_seen: dict[str, int] = {}
    for rec in records:
        by_clip.setdefault(rec.clip_id, {}).setdefault(rec.modality, []).append(rec.vector)
        dims_seen.setdefault(rec.modality, rec.dims)
    out_dims = {}
    for modality in MODALITIES:
        d = dims_seen.get(modality, REFERENCE_DIMS[modality])
        if modality == "audio" and d % audio_frame_dim == 0:
            d = audio_frame_dim
        out_dims[modality] = d
    vectors = []
    flags = []
    for clip_id in clip_ids:
        rows = by_clip.get(clip_id, {})
        audio = rows.get("audio")
        if audio is not None:
            if len(audio) == 1 and audio[0].size % audio_frame_dim == 0 and audio[0].size > audio_frame_dim:
                audio = audio[0].reshape(-1, audio_frame_dim)
            else:
                audio = np.stack(audio)
        face = rows.get("face")
        text_rows = rows.get("text")
        if text_rows is not None and len(text_rows) > 1:
            raise FormatError(f"clip {clip_id!r} has {len(text_rows)} text rows, expected 1")
        text = text_rows[0] if text_rows else None
        face_vec = np.mean(np.stack(face), axis=0) if face else None
        blocks = []
        presence = []
        for modality, value in (("audio", audio), ("face", face_vec), ("text", text)):
            if value is None:
                blocks.append(np.zeros(out_dims[modality]))
                presence.append(0.0)
            else:
                pooled = pool_audio(value) if modality == "audio" else np.asarray(value, dtype=np.float64)
                if pooled.size != out_dims[modality]:
                    raise FormatError(
                        f"clip {clip_id!r}: {modality} width {pooled.size} != {out_dims[modality]}"
                    )
                blocks.append(pooled)
                presence.append(1.0)
        vectors.append(np.concatenate(blocks))
        flags.append(presence)
    fused = np.array(vectors) if vectors else np.zeros((0, sum(out_dims.values())))
    widths = [out_dims[m] for m in MODALITIES]
    edges = np.cumsum([0] + widths)
    return FeatureTable(
        clip_ids=list(clip_ids),
        blocks={m: fused[:, edges[i] : edges[i + 1]] for i, m in enumerate(MODALITIES)},
        presence=np.array(flags) if flags else np.zeros((0, 3)),
    )


def write_features(table: FeatureTable, path) -> None:
    order = [m for m in MODALITIES if m in table.blocks]
    header = ["clip_id"]
    for m in order:
        header += [f"{m}_{i}" for i in range(table.blocks[m].shape[1])]
    header += [f"has_{m}" for m in MODALITIES[: table.presence.shape[1]]]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        fused = table.fused()
        for clip_id, row in zip(table.clip_ids, fused):
            writer.writerow([clip_id] + [format_float(v) for v in row])


def read_features(path) -> FeatureTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "clip_id":
            raise FormatError(f"{path}: expected a clip_id feature header")
        widths = {m: 0 for m in MODALITIES}
        flag_cols = []
        for i, name in enumerate(header[1:], start=1):
            if name.startswith("has_"):
                flag_cols.append(i)
                continue
            modality = name.rsplit("_", 1)[0]
            if modality not in widths:
                raise FormatError(f"{path}: unrecognized feature column {name!r}")
            widths[modality] += 1
        clip_ids = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: ragged feature row")
            clip_ids.append(row[0])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric cell ({exc})") from exc
    data = np.array(rows) if rows else np.zeros((0, len(header) - 1))
    blocks = {}
    offset = 0
    for m in MODALITIES:
        if widths[m]:
            blocks[m] = data[:, offset : offset + widths[m]]
            offset += widths[m]
    presence = data[:, offset:]
    return FeatureTable(clip_ids=clip_ids, blocks=blocks, presence=presence)


# ---------------------------------------------------------------------------
# Standardization + PCA


@dataclass
class Preprocessor:
    means: np.ndarray
    scales: np.ndarray  # population std with a 1e-12 floor
    retained_variance: object = PCA_OFF  # "off" or a fraction in [0.2, 1.0]
    pc_center: np.ndarray | None = None
    pc_basis: np.ndarray | None = None  # (d, k), orthonormal columns
    explained_ratios: np.ndarray | None = None

    @property
    def n_components(self) -> int:
        return 0 if self.pc_basis is None else self.pc_basis.shape[1]

    def transform(self, X: np.ndarray) -> np.ndarray:
        Z = apply_standardizer(self, X)
        if self.pc_basis is None:
            return Z
        return (Z - self.pc_center) @ self.pc_basis

    def inverse_pca(self, Z: np.ndarray) -> np.ndarray:
        if self.pc_basis is None:
            return Z
        return Z @ self.pc_basis.T + self.pc_center


SCALE_FLOOR = 1e-12


def fit_standardizer(X: np.ndarray) -> Preprocessor:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if not np.isfinite(X).all():
        raise ValueError("non-finite value in training features")
    means = X.mean(axis=0)
    scales = np.maximum(X.std(axis=0), SCALE_FLOOR)
    return Preprocessor(means=means, scales=scales)


def apply_standardizer(pre: Preprocessor, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (X - pre.means) / pre.scales


def fit_pca(X_std: np.ndarray, retained_variance) -> Preprocessor:
    """PCA of an already-standardized matrix via SVD of the centered data.

    Keeps the smallest component count whose cumulative explained-variance
    ratio reaches `retained_variance`; "off" yields an identity projection.
    Sign convention: the largest-magnitude loading of each component is
    positive.
    """
    X_std = np.asarray(X_std, dtype=np.float64)
    if not np.isfinite(X_std).all():
        raise ValueError("non-finite input to PCA")
    if X_std.ndim != 2 or X_std.shape[0] < 2:
        raise ValueError("need at least 2 rows for PCA")
    d = X_std.shape[1]
    pre = Preprocessor(means=np.zeros(d), scales=np.ones(d), retained_variance=retained_variance)
    if retained_variance == PCA_OFF:
        return pre
    rv = float(retained_variance)
    if not 0.2 <= rv <= 1.0:
        raise ValueError("retained_variance must be 'off' or within [0.2, 1.0]")
    center = X_std.mean(axis=0)
    Xc = X_std - center
    _, svals, vt = np.linalg.svd(Xc, full_matrices=False)
    eigvals = (svals * svals) / (X_std.shape[0] - 1)
    total = eigvals.sum()
    if total <= 0:
        raise ValueError("zero-variance input to PCA")
    ratios = eigvals / total
    cumulative = np.cumsum(ratios)
    k = int(np.searchsorted(cumulative, rv - 1e-9) + 1)
    k = min(k, len(eigvals))
    basis = vt[:k].T.copy()
    for j in range(k):
        col = basis[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            basis[:, j] = -col
    pre.retained_variance = rv
    pre.pc_center = center
    pre.pc_basis = basis
    pre.explained_ratios = ratios
    return pre


def project(pre: Preprocessor, X_std: np.ndarray) -> np.ndarray:
    if pre.pc_basis is None:
        return np.asarray(X_std, dtype=np.float64)
    return (np.asarray(X_std, dtype=np.float64) - pre.pc_center) @ pre.pc_basis


def fit_preprocessor(X: np.ndarray, retained_variance=PCA_OFF) -> Preprocessor:
    """Standardize then (optionally) PCA, as one fitted transform."""
    pre = fit_standardizer(X)
    Z = apply_standardizer(pre, X)
    pca = fit_pca(Z, retained_variance)
    pre.retained_variance = pca.retained_variance
    pre.pc_center = pca.pc_center
    pre.pc_basis = pca.pc_basis
    pre.explained_ratios = pca.explained_ratios
    return pre
