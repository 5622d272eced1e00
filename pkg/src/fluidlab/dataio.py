"""Readers and writers for every on-disk artifact.

All readers are pure functions; writers expect exclusive access to their
output path.  Floating point values in text tables are serialized with 9
significant digits (exact for 32-bit precision features); model files use
17 digits elsewhere.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TARGETED_GAP = "targeted_gap"
TARGETED_OVERLAP = "targeted_overlap"
NON_TARGETED = "non_targeted"
CLIP_KINDS = (TARGETED_GAP, TARGETED_OVERLAP, NON_TARGETED)

MODALITIES = ("audio", "face", "text")


class FormatError(ValueError):
    """Raised when an input file violates its schema."""


def format_float(x: float) -> str:
    """Canonical 9-significant-digit decimal form used by all text tables."""
    return f"{x:.9g}"


# ---------------------------------------------------------------------------
# Session audio


@dataclass
class SessionAudio:
    session_id: str
    speaker_ids: list[str]
    tracks: np.ndarray  # (n_speakers, n_samples) float64 in [-1, 1]
    sample_rate: int

    @property
    def duration(self) -> float:
        return self.tracks.shape[1] / self.sample_rate


def _read_wav(path: Path) -> tuple[np.ndarray, int]:
    """Parse a mono PCM-16 or IEEE-float-32 WAV file.

    Returns (samples as float64 in [-1, 1], sample_rate).
    """
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: malformed RIFF header")
    fmt = None
    samples = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            if size < 16:
                raise FormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            if fmt is None:
                raise FormatError(f"{path}: data chunk before fmt chunk")
            audio_format, channels, rate, _, _, bits = fmt
            if channels != 1:
                raise FormatError(f"{path}: expected mono audio, got {channels} channels")
            if audio_format == 1 and bits == 16:
                raw = np.frombuffer(body[: len(body) - len(body) % 2], dtype="<i2")
                samples = raw.astype(np.float64) / 32768.0
            elif audio_format == 3 and bits == 32:
                raw = np.frombuffer(body[: len(body) - len(body) % 4], dtype="<f4")
                samples = np.clip(raw.astype(np.float64), -1.0, 1.0)
            else:
                raise FormatError(
                    f"{path}: unsupported format (wFormatTag={audio_format}, bits={bits}); "
                    "only PCM-16 and float-32 are handled"
                )
        pos += 8 + size + (size & 1)
    if fmt is None or samples is None:
        raise FormatError(f"{path}: missing fmt or data chunk")
    return samples, fmt[2]


def write_wav(path, samples: np.ndarray, sample_rate: int, encoding: str = "pcm16") -> None:
    """Write a mono WAV file (pcm16 or float32) for synthesis and fixtures."""
    samples = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    if encoding == "pcm16":
        body = (samples * 32767.0).round().astype("<i2").tobytes()
        fmt = struct.pack("<HHIIHH", 1, 1, sample_rate, sample_rate * 2, 2, 16)
    elif encoding == "float32":
        body = samples.astype("<f4").tobytes()
        fmt = struct.pack("<HHIIHH", 3, 1, sample_rate, sample_rate * 4, 4, 32)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    with open(path, "wb") as fh:
        payload = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
        payload += b"data" + struct.pack("<I", len(body)) + body
        fh.write(b"RIFF" + struct.pack("<I", len(payload)) + payload)


def read_session_audio(path) -> SessionAudio:
    """Load a directory of per-speaker mono WAV files as one session.

    Filenames are `<speaker_id>.wav`; all tracks must share one sample rate.
    Track lengths are trimmed to the shortest track.
    """
    path = Path(path)
    wavs = sorted(path.glob("*.wav"))
    if not wavs:
        raise FormatError(f"{path}: no speaker WAV files found")
    speaker_ids = []
    tracks = []
    rates = []
    for wav in wavs:
        samples, rate = _read_wav(wav)
        speaker_ids.append(wav.stem)
        tracks.append(samples)
        rates.append(rate)
    if len(set(rates)) > 1:
        detail = ", ".join(f"{s}={r}" for s, r in zip(speaker_ids, rates))
        raise FormatError(f"{path}: mismatched sample rates across tracks ({detail})")
    n = min(len(t) for t in tracks)
    stacked = np.stack([t[:n] for t in tracks])
    return SessionAudio(path.name, speaker_ids, stacked, rates[0])


def write_session_audio(session: SessionAudio, out_dir, encoding: str = "float32") -> list:
    """Write one `<speaker_id>.wav` per track under `out_dir`.

    Float32 is the default so a write/read round trip preserves samples.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for speaker, track in zip(session.speaker_ids, session.tracks):
        p = out_dir / f"{speaker}.wav"
        write_wav(p, track, session.sample_rate, encoding)
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# Clip manifests


@dataclass(frozen=True)
class ClipManifest:
    clip_id: str
    session_id: str
    mark_time: float
    start: float
    end: float
    kind: str

    @property
    def span(self) -> tuple[float, float]:
        return (self.start, self.end)


def write_manifest(clips: list[ClipManifest], path) -> None:
    seen = set()
    for clip in clips:
        if clip.clip_id in seen:
            raise FormatError(f"duplicate clip_id {clip.clip_id!r}")
        seen.add(clip.clip_id)
    with open(path, "w") as fh:
        for clip in clips:
            fh.write(
                json.dumps(
                    {
                        "clip_id": clip.clip_id,
                        "session_id": clip.session_id,
                        "mark_time": clip.mark_time,
                        "start": clip.start,
                        "end": clip.end,
                        "kind": clip.kind,
                    }
                )
                + "\n"
            )


def read_manifest(path) -> list[ClipManifest]:
    clips = []
    seen = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                clip = ClipManifest(
                    clip_id=str(rec["clip_id"]),
                    session_id=str(rec["session_id"]),
                    mark_time=float(rec["mark_time"]),
                    start=float(rec["start"]),
                    end=float(rec["end"]),
                    kind=str(rec["kind"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: unparsable manifest line ({exc})") from exc
            if clip.kind not in CLIP_KINDS:
                raise FormatError(f"{path}:{lineno}: unknown clip kind {clip.kind!r}")
            if clip.clip_id in seen:
                raise FormatError(f"{path}:{lineno}: duplicate clip_id {clip.clip_id!r}")
            seen.add(clip.clip_id)
            clips.append(clip)
    return clips


# ---------------------------------------------------------------------------
# Embedding tables


@dataclass
class EmbeddingRecord:
    clip_id: str
    modality: str
    vector: np.ndarray

    @property
    def dims(self) -> int:
        return len(self.vector)


def read_embeddings(path) -> list[EmbeddingRecord]:
    """Read `clip_id,modality,v0..` rows.

    Rows may have different widths across modalities, but every row of one
    modality must have the same width.  Multiple rows per (clip, modality)
    are allowed (audio frames, face participants).
    """
    records = []
    dims_by_modality: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty embeddings file") from None
        if header[:2] != ["clip_id", "modality"]:
            raise FormatError(f"{path}: header must start with clip_id,modality")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 3:
                raise FormatError(f"{path}:{lineno}: ragged row ({len(row)} fields, need >= 3)")
            clip_id, modality = row[0], row[1]
            if modality not in MODALITIES:
                raise FormatError(f"{path}:{lineno}: unknown modality {modality!r}")
            try:
                vector = np.array([float(v) for v in row[2:]], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric cell ({exc})") from exc
            if not np.isfinite(vector).all():
                raise FormatError(
                    f"{path}:{lineno}: non-finite value in {modality} vector of clip {clip_id!r}"
                )
            want = dims_by_modality.setdefault(modality, len(vector))
            if len(vector) != want:
                raise FormatError(
                    f"{path}:{lineno}: dimension mismatch for modality {modality!r} "
                    f"({len(vector)} != {want})"
                )
            records.append(EmbeddingRecord(clip_id, modality, vector))
    return records


def write_embeddings(records: list[EmbeddingRecord], path) -> None:
    max_dims = max((r.dims for r in records), default=0)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id", "modality"] + [f"v{i}" for i in range(max_dims)])
        for rec in records:
            writer.writerow([rec.clip_id, rec.modality] + [format_float(v) for v in rec.vector])


# ---------------------------------------------------------------------------
# Annotation tables


def read_annotations(path) -> dict[tuple[str, str], tuple[int, int]]:
    """Read `clip_id,annotator_id,fluidity,enjoyment` rows into a ratings map."""
    ratings: dict[tuple[str, str], tuple[int, int]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:4]] != [
            "clip_id",
            "annotator_id",
            "fluidity",
            "enjoyment",
        ]:
            raise FormatError(f"{path}: expected header clip_id,annotator_id,fluidity,enjoyment")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 4:
                raise FormatError(f"{path}:{lineno}: ragged annotation row")
            clip_id, annotator_id = row[0], row[1]
            try:
                flu, enj = int(row[2]), int(row[3])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer rating ({exc})") from exc
            for value in (flu, enj):
                if not 1 <= value <= 5:
                    raise FormatError(f"{path}:{lineno}: rating {value} outside 1..5")
            key = (clip_id, annotator_id)
            if key in ratings:
                raise FormatError(
                    f"{path}:{lineno}: duplicate rating for clip {clip_id!r} "
                    f"by annotator {annotator_id!r}"
                )
            ratings[key] = (flu, enj)
    return ratings


def write_annotations(ratings: dict[tuple[str, str], tuple[int, int]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id", "annotator_id", "fluidity", "enjoyment"])
        for (clip_id, annotator_id), (flu, enj) in ratings.items():
            writer.writerow([clip_id, annotator_id, flu, enj])


# ---------------------------------------------------------------------------
# Label tables (aggregated + binarized clips)


@dataclass(frozen=True)
class LabeledClip:
    clip_id: str
    mean_fluidity: float
    mean_enjoyment: float
    n_annotators: int
    label_fluidity: int  # 1 = low / negative class
    label_enjoyment: int


LABEL_COLUMNS = [
    "clip_id",
    "mean_fluidity",
    "mean_enjoyment",
    "n_annotators",
    "label_fluidity",
    "label_enjoyment",
]


def write_labels(clips: list[LabeledClip], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABEL_COLUMNS)
        for c in clips:
            writer.writerow(
                [
                    c.clip_id,
                    format_float(c.mean_fluidity),
                    format_float(c.mean_enjoyment),
                    c.n_annotators,
                    c.label_fluidity,
                    c.label_enjoyment,
                ]
            )


def read_labels(path) -> list[LabeledClip]:
    out = []
    seen = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LABEL_COLUMNS:
            raise FormatError(f"{path}: expected header {','.join(LABEL_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(LABEL_COLUMNS):
                raise FormatError(f"{path}:{lineno}: ragged label row")
            try:
                clip = LabeledClip(
                    clip_id=row[0],
                    mean_fluidity=float(row[1]),
                    mean_enjoyment=float(row[2]),
                    n_annotators=int(row[3]),
                    label_fluidity=int(row[4]),
                    label_enjoyment=int(row[5]),
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad label row ({exc})") from exc
            if clip.label_fluidity not in (0, 1) or clip.label_enjoyment not in (0, 1):
                raise FormatError(f"{path}:{lineno}: labels must be 0 or 1")
            if clip.clip_id in seen:
                raise FormatError(f"{path}:{lineno}: duplicate clip_id {clip.clip_id!r}")
            seen.add(clip.clip_id)
            out.append(clip)
    return out


# ---------------------------------------------------------------------------
# Result tables


@dataclass(frozen=True)
class MetricRecord:
    combo_id: str
    method: str
    target: str
    labeled_fraction: float
    roc_auc: float
    macro_f1: float
    seed: int


RESULT_COLUMNS = ["combo_id", "method", "target", "labeled_fraction", "roc_auc", "macro_f1", "seed"]


def write_results(records: list[MetricRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.combo_id,
                    r.method,
                    r.target,
                    format_float(r.labeled_fraction),
                    format_float(r.roc_auc),
                    format_float(r.macro_f1),
                    r.seed,
                ]
            )


def read_results(path) -> list[MetricRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_COLUMNS:
            raise FormatError(f"{path}: expected header {','.join(RESULT_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RESULT_COLUMNS):
                raise FormatError(f"{path}:{lineno}: ragged result row")
            try:
                out.append(
                    MetricRecord(
                        combo_id=row[0],
                        method=row[1],
                        target=row[2],
                        labeled_fraction=float(row[3]),
                        roc_auc=float(row[4]),
                        macro_f1=float(row[5]),
                        seed=int(row[6]),
                    )
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad result row ({exc})") from exc
    return out
