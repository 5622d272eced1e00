import numpy as np
import pytest

from fluidlab.dataio import EmbeddingRecord
from fluidlab.features import PCA_OFF, assemble_table, fit_preprocessor
from fluidlab.linear import SgdConfig, fit_linear, predict_proba
from fluidlab.ssl import (
    METHOD_COTRAIN_FUSED,
    METHOD_COTRAIN_SPLIT,
    METHOD_SELF,
    METHOD_SL,
    TERMINAL_REASONS,
    PseudoLabelTrace,
    SslConfig,
    _select,
    co_train,
    fit_ssl,
    predict_cotrain,
    read_trace,
    self_train,
    split_views_fused,
    split_views_modality,
    trace_from_json,
    trace_to_json,
    write_trace,
)


def _small_table(seed=0, n=30, dims=(4, 4, 4)):
    rng = np.random.default_rng(seed)
    y = (np.arange(n) % 2).astype(int)
    records = []
    clip_ids = [f"c{i:03d}" for i in range(n)]
    for i, cid in enumerate(clip_ids):
        shift = 1.5 * (2 * y[i] - 1)
        records.append(EmbeddingRecord(cid, "audio", rng.normal(size=dims[0]) + shift))
        records.append(EmbeddingRecord(cid, "face", rng.normal(size=dims[1]) + shift))
        records.append(EmbeddingRecord(cid, "text", rng.normal(size=dims[2]) + shift))
    table = assemble_table(records, clip_ids, audio_frame_dim=dims[0])
    return table, y


def test_config_validation():
    with pytest.raises(ValueError):
        SslConfig(method="label_prop")
    with pytest.raises(ValueError):
        SslConfig(criterion="entropy")
    with pytest.raises(ValueError):
        SslConfig(threshold=1.5)
    with pytest.raises(ValueError):
        SslConfig(k_best=0)


def test_select_threshold_and_kbest_ties():
    conf = np.array([0.9, 0.7, 0.9, 0.9, 0.6])
    thr = SslConfig(criterion="threshold", threshold=0.85)
    np.testing.assert_array_equal(_select(conf, thr), [0, 2, 3])
    kb = SslConfig(criterion="k_best", k_best=2)
    # ties broken by position, deterministically
    np.testing.assert_array_equal(_select(conf, kb), [0, 2])
    kb_all = SslConfig(criterion="k_best", k_best=99)
    np.testing.assert_array_equal(_select(conf, kb_all), np.arange(5))


# ---------------------------------------------------------------------------
# Degeneracy: no unlabeled data -> the supervised counterpart, exactly


def test_self_training_degenerates_to_sl():
    table, y = _small_table()
    rows = np.arange(table.n_clips)
    empty = np.array([], dtype=int)
    base = dict(retained_variance=PCA_OFF)
    sl = fit_ssl(table, rows, y, empty, SslConfig(method=METHOD_SL), **base)
    st = fit_ssl(table, rows, y, empty, SslConfig(method=METHOD_SELF), **base)
    p_sl = sl.predict(table, rows)
    p_st = st.predict(table, rows)
    assert np.max(np.abs(p_sl - p_st)) <= 1e-12
    assert st.trace.terminal_reason == "exhausted_unlabeled"
    assert st.trace.n_pseudo_labels() == 0


@pytest.mark.parametrize("method", [METHOD_COTRAIN_SPLIT, METHOD_COTRAIN_FUSED])
def test_cotraining_degenerates_to_supervised_ensemble(method):
    table, y = _small_table(seed=1)
    rows = np.arange(table.n_clips)
    empty = np.array([], dtype=int)
    cfg = SslConfig(method=method, seed=7)
    run = fit_ssl(table, rows, y, empty, cfg, retained_variance=PCA_OFF)
    assert run.trace.n_pseudo_labels() == 0

    # independently rebuild the supervised two-view ensemble
    matrix = table.fused()
    if method == METHOD_COTRAIN_SPLIT:
        cols_a, cols_b = split_views_modality(table)
        pre_a = fit_preprocessor(matrix[np.ix_(rows, cols_a)], PCA_OFF)
        pre_b = fit_preprocessor(matrix[np.ix_(rows, cols_b)], PCA_OFF)
        za = pre_a.transform(matrix[np.ix_(rows, cols_a)])
        zb = pre_b.transform(matrix[np.ix_(rows, cols_b)])
    else:
        pre = fit_preprocessor(matrix[rows], PCA_OFF)
        Z = pre.transform(matrix[rows])
        cols_a, cols_b = split_views_fused(Z, cfg.seed)
        za, zb = Z[:, cols_a], Z[:, cols_b]
    ma = fit_linear(za, y, cfg.base)
    mb = fit_linear(zb, y, cfg.base)
    expected = predict_cotrain((ma, mb), za, zb)
    np.testing.assert_allclose(run.predict(table, rows), expected, atol=1e-12)


# ---------------------------------------------------------------------------
# Pseudo-labeling behavior and trace audits


def _clusters(rng, n, d, shift):
    return rng.normal(size=(n, d)) * 0.4 + shift


def test_self_training_adopts_and_audits():
    rng = np.random.default_rng(2)
    X_lab = np.vstack([_clusters(rng, 6, 3, -2.0), _clusters(rng, 6, 3, 2.0)])
    y_lab = np.array([0] * 6 + [1] * 6)
    X_unlab = np.vstack([_clusters(rng, 20, 3, -2.0), _clusters(rng, 20, 3, 2.0)])
    cfg = SslConfig(criterion="threshold", threshold=0.8, max_iters=10)
    model, trace = self_train(X_lab, y_lab, X_unlab, cfg, unlabeled_ids=[f"u{i}" for i in range(40)])

    positions = trace.adopted_positions()
    assert len(positions) == len(set(positions))
    assert all(0 <= p < 40 for p in positions)
    assert trace.terminal_reason in TERMINAL_REASONS
    assert trace.n_pseudo_labels() == len(positions)
    for it in trace.iterations:
        for pos, label, conf in it.adopted:
            assert label in (0, 1)
            assert conf >= cfg.threshold
    # crisp clusters: essentially everything gets adopted
    assert trace.n_pseudo_labels() >= 35
    acc = ((predict_proba(model, X_unlab) >= 0.5) == np.array([0] * 20 + [1] * 20)).mean()
    assert acc > 0.9
    assert trace.unlabeled_ids[:2] == ["u0", "u1"]


def test_self_training_no_confident_stop():
    rng = np.random.default_rng(3)
    X_lab = np.vstack([_clusters(rng, 8, 2, -1.5), _clusters(rng, 8, 2, 1.5)])
    y_lab = np.array([0] * 8 + [1] * 8)
    X_unlab = rng.normal(size=(15, 2)) * 0.05  # hugging the boundary
    cfg = SslConfig(criterion="threshold", threshold=0.999, max_iters=10)
    _, trace = self_train(X_lab, y_lab, X_unlab, cfg)
    assert trace.terminal_reason == "no_confident"
    assert trace.n_pseudo_labels() == 0


def test_self_training_max_iters_stop():
    rng = np.random.default_rng(4)
    X_lab = np.vstack([_clusters(rng, 6, 2, -2.0), _clusters(rng, 6, 2, 2.0)])
    y_lab = np.array([0] * 6 + [1] * 6)
    X_unlab = np.vstack([_clusters(rng, 30, 2, -2.0), _clusters(rng, 30, 2, 2.0)])
    cfg = SslConfig(criterion="k_best", k_best=5, max_iters=2)
    _, trace = self_train(X_lab, y_lab, X_unlab, cfg)
    assert trace.terminal_reason == "max_iters"
    assert len(trace.iterations) == 2
    assert trace.n_pseudo_labels() == 10


def test_self_training_exhausts_pool():
    rng = np.random.default_rng(5)
    X_lab = np.vstack([_clusters(rng, 6, 2, -2.0), _clusters(rng, 6, 2, 2.0)])
    y_lab = np.array([0] * 6 + [1] * 6)
    X_unlab = np.vstack([_clusters(rng, 4, 2, -2.0), _clusters(rng, 4, 2, 2.0)])
    cfg = SslConfig(criterion="threshold", threshold=0.5, max_iters=10)
    _, trace = self_train(X_lab, y_lab, X_unlab, cfg)
    assert trace.terminal_reason == "exhausted_unlabeled"
    assert trace.n_pseudo_labels() == 8


def test_cotrain_conflict_is_skipped():
    rng = np.random.default_rng(6)
    # both views separate their labeled data, but the single unlabeled
    # point reads positive in view A and negative in view B
    a_lab = np.concatenate([_clusters(rng, 8, 1, -2.0), _clusters(rng, 8, 1, 2.0)])
    b_lab = np.concatenate([_clusters(rng, 8, 1, -2.0), _clusters(rng, 8, 1, 2.0)])
    y_lab = np.array([0] * 8 + [1] * 8)
    a_unlab = np.array([[3.0]])
    b_unlab = np.array([[-3.0]])
    cfg = SslConfig(
        method=METHOD_COTRAIN_SPLIT, criterion="threshold", threshold=0.8, max_iters=5
    )
    (ma, mb), trace = co_train(a_lab, b_lab, y_lab, a_unlab, b_unlab, cfg)
    assert trace.terminal_reason == "no_confident"
    assert trace.n_pseudo_labels() == 0
    assert trace.iterations[-1].skipped == [0]


def test_cotrain_adopts_cross_view():
    rng = np.random.default_rng(7)
    a_lab = np.concatenate([_clusters(rng, 8, 2, -2.0), _clusters(rng, 8, 2, 2.0)])
    b_lab = np.concatenate([_clusters(rng, 8, 2, -2.0), _clusters(rng, 8, 2, 2.0)])
    y_lab = np.array([0] * 8 + [1] * 8)
    a_unlab = np.concatenate([_clusters(rng, 10, 2, -2.0), _clusters(rng, 10, 2, 2.0)])
    b_unlab = np.concatenate([_clusters(rng, 10, 2, -2.0), _clusters(rng, 10, 2, 2.0)])
    cfg = SslConfig(method=METHOD_COTRAIN_SPLIT, threshold=0.8, max_iters=10)
    models, trace = co_train(a_lab, b_lab, y_lab, a_unlab, b_unlab, cfg)
    assert trace.n_pseudo_labels() >= 15
    p = predict_cotrain(models, a_unlab, b_unlab)
    np.testing.assert_allclose(
        p, (predict_proba(models[0], a_unlab) + predict_proba(models[1], b_unlab)) / 2
    )


def test_split_views_fused_partitions_columns():
    Z = np.zeros((3, 7))
    a, b = split_views_fused(Z, seed=3)
    assert len(a) == 4 and len(b) == 3
    assert sorted(np.concatenate([a, b]).tolist()) == list(range(7))
    a2, b2 = split_views_fused(Z, seed=3)
    np.testing.assert_array_equal(a, a2)
    a3, _ = split_views_fused(Z, seed=4)
    assert not np.array_equal(a, a3)


def test_split_views_modality_covers_fused_layout():
    table, _ = _small_table()
    a, b = split_views_modality(table)
    groups = table.column_groups()
    assert set(a.tolist()) == set(groups["audio"].tolist()) | set(groups["has_audio"].tolist())
    total = table.fused().shape[1]
    assert sorted(np.concatenate([a, b]).tolist()) == list(range(total))


def test_fit_ssl_validates_lengths():
    table, y = _small_table()
    with pytest.raises(ValueError):
        fit_ssl(table, np.arange(4), y[:3], np.array([], dtype=int), SslConfig())


def test_trace_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    X_lab = np.vstack([_clusters(rng, 6, 2, -2.0), _clusters(rng, 6, 2, 2.0)])
    y_lab = np.array([0] * 6 + [1] * 6)
    X_unlab = np.vstack([_clusters(rng, 5, 2, -2.0), _clusters(rng, 5, 2, 2.0)])
    _, trace = self_train(X_lab, y_lab, X_unlab, SslConfig(), unlabeled_ids=[f"u{i}" for i in range(10)])
    path = tmp_path / "trace.json"
    write_trace(trace, path)
    back = read_trace(path)
    assert back.terminal_reason == trace.terminal_reason
    assert back.adopted_positions() == trace.adopted_positions()
    assert back.unlabeled_ids == trace.unlabeled_ids
    # and the text form round-trips through the parser unchanged
    assert trace_to_json(trace_from_json(trace_to_json(trace))) == trace_to_json(trace)


def test_trace_rejects_bad_reason():
    with pytest.raises(Exception, match="terminal"):
        trace_from_json('{"iterations": [], "terminal_reason": "gave_up"}')
