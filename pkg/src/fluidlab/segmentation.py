"""Gap/overlap detection from multi-speaker RMS activity and 7-second clip extraction.

A frame is "active" for a speaker when its RMS reaches the threshold.  A gap
is a maximal run of frames where no speaker is active lasting at least
`min_gap` seconds; an overlap is a maximal run where two or more speakers
are active (no minimum duration).  Marks are placed at run onsets.  Marks
whose clip window would cross the session boundary are dropped, and after a
mark is accepted no further mark of the same kind is accepted until the
previous clip window has fully passed, so clips of one kind never overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import NON_TARGETED, TARGETED_GAP, TARGETED_OVERLAP, ClipManifest, SessionAudio


@dataclass(frozen=True)
class SegmentationConfig:
    rms_threshold: float = 0.05
    min_gap: float = 0.75
    pre: float = 3.0
    post: float = 4.0
    edge_exclusion: float = 10.0
    frame_len: float = 0.05
    hop: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.rms_threshold < 1.0:
            raise ValueError("rms_threshold must be in (0, 1)")
        if self.min_gap <= 0:
            raise ValueError("min_gap must be positive")
        if abs((self.pre + self.post) - 7.0) > 1e-9:
            raise ValueError("pre + post must equal the 7 s clip length")
        if not self.frame_len >= self.hop > 0:
            raise ValueError("need frame_len >= hop > 0")

    @property
    def clip_len(self) -> float:
        return self.pre + self.post


@dataclass
class ActivityTimeline:
    active: np.ndarray  # (n_speakers, n_frames) bool
    frame_times: np.ndarray  # frame start times, seconds
    frame_len: float  # realized frame length, seconds
    hop: float  # realized hop, seconds
    duration: float  # session duration, seconds


def compute_rms(track: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Frame-wise RMS; frame i covers samples [i*hop, i*hop + frame_len)."""
    track = np.asarray(track, dtype=np.float64)
    if frame_len <= 0 or hop <= 0:
        raise ValueError("frame_len and hop must be positive sample counts")
    if len(track) < frame_len:
        raise ValueError(f"track of {len(track)} samples is shorter than one frame ({frame_len})")
    n_frames = (len(track) - frame_len) // hop + 1
    csum = np.concatenate(([0.0], np.cumsum(track * track)))
    starts = np.arange(n_frames) * hop
    sums = csum[starts + frame_len] - csum[starts]
    # cumulative sums can go microscopically negative over long silent stretches
    return np.sqrt(np.maximum(sums, 0.0) / frame_len)


def build_timeline(session: SessionAudio, cfg: SegmentationConfig) -> ActivityTimeline:
    rate = session.sample_rate
    frame_samples = max(1, int(round(cfg.frame_len * rate)))
    hop_samples = max(1, int(round(cfg.hop * rate)))
    active = np.stack(
        [compute_rms(track, frame_samples, hop_samples) >= cfg.rms_threshold for track in session.tracks]
    )
    n_frames = active.shape[1]
    hop_s = hop_samples / rate
    return ActivityTimeline(
        active=active,
        frame_times=np.arange(n_frames) * hop_s,
        frame_len=frame_samples / rate,
        hop=hop_s,
        duration=session.duration,
    )


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as (start_frame, n_frames)."""
    if not mask.any():
        return []
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(s), int(e - s)) for s, e in zip(edges[::2], edges[1::2])]


def _select_marks(
    runs: list[tuple[int, int]],
    timeline: ActivityTimeline,
    cfg: SegmentationConfig,
    min_duration: float,
) -> list[float]:
    marks = []
    next_allowed = -np.inf
    for start, n in runs:
        onset = float(timeline.frame_times[start])
        duration = (n - 1) * timeline.hop + timeline.frame_len
        if duration + 1e-9 < min_duration:
            continue
        if onset - cfg.pre < -1e-9 or onset + cfg.post > timeline.duration + 1e-9:
            continue  # clip window would cross the session boundary
        if onset < next_allowed - 1e-9:
            continue  # previous clip window still open
        marks.append(onset)
        next_allowed = onset + cfg.clip_len
    return marks


def detect_gaps(timeline: ActivityTimeline, cfg: SegmentationConfig) -> list[float]:
    """Onsets of runs where every speaker stays below the RMS threshold >= min_gap."""
    if timeline.active.size == 0:
        raise ValueError("empty activity timeline")
    silent = ~timeline.active.any(axis=0)
    return _select_marks(_runs(silent), timeline, cfg, cfg.min_gap)


def detect_overlaps(timeline: ActivityTimeline, cfg: SegmentationConfig) -> list[float]:
    """Onsets of runs where at least two speakers are active simultaneously."""
    if timeline.active.size == 0:
        raise ValueError("empty activity timeline")
    overlapping = timeline.active.sum(axis=0) >= 2
    return _select_marks(_runs(overlapping), timeline, cfg, 0.0)


def _clip_id(session_id: str, kind: str, time_s: float) -> str:
    return f"{session_id}_{kind}_{int(round(time_s * 1000))}"


def extract_clips(
    marks: list[float], kind: str, cfg: SegmentationConfig, session_id: str
) -> list[ClipManifest]:
    if kind not in (TARGETED_GAP, TARGETED_OVERLAP):
        raise ValueError(f"extract_clips only handles targeted kinds, got {kind!r}")
    return [
        ClipManifest(
            clip_id=_clip_id(session_id, kind, m),
            session_id=session_id,
            mark_time=m,
            start=m - cfg.pre,
            end=m + cfg.post,
            kind=kind,
        )
        for m in marks
    ]


def extract_non_targeted(
    session_id: str,
    duration: float,
    targeted: list[ClipManifest],
    cfg: SegmentationConfig,
) -> list[ClipManifest]:
    """Tile the non-targeted remainder with consecutive 7 s windows.

    The usable range excludes the first and last `edge_exclusion` seconds and
    every targeted span; each remaining segment is tiled from its start and a
    final window shorter than 7 s is discarded.
    """
    lo = cfg.edge_exclusion
    hi = duration - cfg.edge_exclusion
    if hi - lo < cfg.clip_len:
        return []
    spans = sorted((c.start, c.end) for c in targeted)
    segments = []
    cursor = lo
    for start, end in spans:
        if end <= lo or start >= hi:
            continue
        if start > cursor:
            segments.append((cursor, min(start, hi)))
        cursor = max(cursor, end)
    if cursor < hi:
        segments.append((cursor, hi))
    clips = []
    for seg_start, seg_end in segments:
        n = int((seg_end - seg_start + 1e-9) // cfg.clip_len)
        for i in range(n):
            start = seg_start + i * cfg.clip_len
            clips.append(
                ClipManifest(
                    clip_id=_clip_id(session_id, NON_TARGETED, start),
                    session_id=session_id,
                    mark_time=start,
                    start=start,
                    end=start + cfg.clip_len,
                    kind=NON_TARGETED,
                )
            )
    return clips


def segment_session(session: SessionAudio, cfg: SegmentationConfig) -> list[ClipManifest]:
    """Full per-session pipeline: timeline, targeted marks, non-targeted tiling."""
    timeline = build_timeline(session, cfg)
    gaps = extract_clips(detect_gaps(timeline, cfg), TARGETED_GAP, cfg, session.session_id)
    overlaps = extract_clips(
        detect_overlaps(timeline, cfg), TARGETED_OVERLAP, cfg, session.session_id
    )
    targeted = gaps + overlaps
    non_targeted = extract_non_targeted(session.session_id, session.duration, targeted, cfg)
    return targeted + non_targeted
