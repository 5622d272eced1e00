import numpy as np
import pytest

from fluidlab import dataio
from fluidlab.dataio import (
    ClipManifest,
    EmbeddingRecord,
    FormatError,
    LabeledClip,
    MetricRecord,
    SessionAudio,
)


def test_wav_float32_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    samples = np.clip(rng.normal(scale=0.3, size=1600), -1, 1)
    path = tmp_path / "t.wav"
    dataio.write_wav(path, samples, 16000, encoding="float32")
    back, rate = dataio._read_wav(path)
    assert rate == 16000
    np.testing.assert_array_equal(back, samples.astype("<f4").astype(np.float64))


def test_wav_pcm16_round_trip_quantized(tmp_path):
    rng = np.random.default_rng(1)
    samples = np.clip(rng.normal(scale=0.3, size=800), -1, 1)
    path = tmp_path / "t.wav"
    dataio.write_wav(path, samples, 8000)
    back, rate = dataio._read_wav(path)
    assert rate == 8000
    assert np.max(np.abs(back - samples)) <= 1.5 / 32768.0


def test_wav_rejects_stereo(tmp_path):
    import struct

    fmt = struct.pack("<HHIIHH", 1, 2, 16000, 64000, 4, 16)
    body = b"\x00\x00" * 8
    payload = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    payload += b"data" + struct.pack("<I", len(body)) + body
    path = tmp_path / "stereo.wav"
    path.write_bytes(b"RIFF" + struct.pack("<I", len(payload)) + payload)
    with pytest.raises(FormatError, match="mono"):
        dataio._read_wav(path)


def test_session_audio_read(tmp_path):
    d = tmp_path / "sess_03"
    session = SessionAudio(
        session_id="whatever",
        speaker_ids=["beta", "alpha"],
        tracks=np.vstack([np.full(100, 0.1), np.full(100, -0.1)]),
        sample_rate=16000,
    )
    dataio.write_session_audio(session, d)
    back = dataio.read_session_audio(d)
    # session id comes from the directory, speakers sort by filename
    assert back.session_id == "sess_03"
    assert back.speaker_ids == ["alpha", "beta"]
    assert back.tracks.shape == (2, 100)
    np.testing.assert_allclose(back.tracks[0], -0.1, atol=1e-6)


def test_session_audio_trims_to_shortest(tmp_path):
    d = tmp_path / "s"
    d.mkdir()
    dataio.write_wav(d / "a.wav", np.zeros(150), 16000)
    dataio.write_wav(d / "b.wav", np.zeros(100), 16000)
    assert dataio.read_session_audio(d).tracks.shape == (2, 100)


def test_session_audio_mismatched_rates(tmp_path):
    d = tmp_path / "s"
    d.mkdir()
    dataio.write_wav(d / "a.wav", np.zeros(10), 16000)
    dataio.write_wav(d / "b.wav", np.zeros(10), 8000)
    with pytest.raises(FormatError, match="sample rates"):
        dataio.read_session_audio(d)


def test_manifest_round_trip(tmp_path):
    clips = [
        ClipManifest("s1_targeted_gap_15000", "s1", 15.0, 12.0, 19.0, "targeted_gap"),
        ClipManifest("s1_non_targeted_30000", "s1", 30.0, 30.0, 37.0, "non_targeted"),
    ]
    path = tmp_path / "m.jsonl"
    dataio.write_manifest(clips, path)
    assert dataio.read_manifest(path) == clips


def test_manifest_duplicate_ids(tmp_path):
    c = ClipManifest("x", "s", 1.0, 0.0, 7.0, "targeted_gap")
    with pytest.raises(FormatError, match="duplicate"):
        dataio.write_manifest([c, c], tmp_path / "m.jsonl")


def test_manifest_unknown_kind(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(
        '{"clip_id": "a", "session_id": "s", "mark_time": 1, "start": 0, "end": 7, "kind": "bogus"}\n'
    )
    with pytest.raises(FormatError, match="kind"):
        dataio.read_manifest(path)


def test_annotations_round_trip(tmp_path):
    ratings = {("clip_a", "ann1"): (3, 4), ("clip_a", "ann2"): (1, 5), ("clip_b", "ann1"): (2, 2)}
    path = tmp_path / "r.csv"
    dataio.write_annotations(ratings, path)
    assert dataio.read_annotations(path) == ratings


@pytest.mark.parametrize("bad", [0, 6, -1])
def test_annotations_rating_out_of_range(tmp_path, bad):
    path = tmp_path / "r.csv"
    path.write_text(f"clip_id,annotator_id,fluidity,enjoyment\nc,a,{bad},3\n")
    with pytest.raises(FormatError):
        dataio.read_annotations(path)


def test_annotations_duplicate_pair(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("clip_id,annotator_id,fluidity,enjoyment\nc,a,3,3\nc,a,2,2\n")
    with pytest.raises(FormatError, match="duplicate"):
        dataio.read_annotations(path)


def test_labels_round_trip(tmp_path):
    clips = [
        LabeledClip("c1", 2.25, 3.0, 4, 1, 0),
        LabeledClip("c2", 3.5, 2.0, 5, 0, 1),
    ]
    path = tmp_path / "labels.csv"
    dataio.write_labels(clips, path)
    assert dataio.read_labels(path) == clips


def test_labels_bad_label_value(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text(
        "clip_id,mean_fluidity,mean_enjoyment,n_annotators,label_fluidity,label_enjoyment\n"
        "c,2.0,2.0,4,2,0\n"
    )
    with pytest.raises(FormatError):
        dataio.read_labels(path)


def test_results_round_trip(tmp_path):
    records = [
        MetricRecord("t0.1_l2", "sl", "fluidity", 0.1, 0.8125, 0.5, 12345),
        MetricRecord("t0.1_l2", "self_training", "fluidity", 0.1, 0.9, 0.625, 12345),
    ]
    path = tmp_path / "results.csv"
    dataio.write_results(records, path)
    back = dataio.read_results(path)
    assert [r.method for r in back] == ["sl", "self_training"]
    assert back[0].roc_auc == pytest.approx(0.8125)
    assert back[0].seed == 12345


def test_results_header_check(tmp_path):
    path = tmp_path / "results.csv"
    path.write_text("wrong,header\n1,2\n")
    with pytest.raises(FormatError, match="header"):
        dataio.read_results(path)


def test_embeddings_round_trip(tmp_path):
    records = [
        EmbeddingRecord("c1", "audio", np.arange(4.0)),
        EmbeddingRecord("c1", "audio", np.arange(4.0) + 1),
        EmbeddingRecord("c1", "text", np.array([0.5, -0.5])),
    ]
    path = tmp_path / "e.csv"
    dataio.write_embeddings(records, path)
    back = dataio.read_embeddings(path)
    assert len(back) == 3
    assert back[0].modality == "audio"
    np.testing.assert_array_equal(back[1].vector, np.arange(4.0) + 1)


def test_embeddings_reject_inconsistent_width(tmp_path):
    records = [
        EmbeddingRecord("c1", "text", np.zeros(3)),
        EmbeddingRecord("c2", "text", np.zeros(4)),
    ]
    path = tmp_path / "e.csv"
    dataio.write_embeddings(records, path)
    with pytest.raises(FormatError, match="mismatch"):
        dataio.read_embeddings(path)


def test_embeddings_reject_nonfinite(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("clip_id,modality,v0\nc,audio,nan\n")
    with pytest.raises(FormatError):
        dataio.read_embeddings(path)


def test_embeddings_unknown_modality(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("clip_id,modality,v0\nc,video,1.0\n")
    with pytest.raises(FormatError, match="modality"):
        dataio.read_embeddings(path)
