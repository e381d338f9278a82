import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
import synth
from figforge import metrics


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ctp_matches_oracle_and_bounds(seed):
    gt, dm = synth.random_map_pair(np.random.default_rng(seed), max_size=32)
    r = metrics.evaluate_figure(gt, dm)
    assert r.counts.ctp == oracles.ctp(gt, dm)
    assert r.counts.tp == oracles.tp(gt, dm)
    assert r.counts.ctp <= r.counts.tp
    assert 0 <= r.f1_ctp <= r.f1_tp <= 1
    assert 0 <= r.precision_ctp <= r.precision_tp <= 1
    assert r.counts.total == gt.size


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ctp_invariant_under_id_relabelling(seed):
    rng = np.random.default_rng(seed)
    gt, dm = synth.random_map_pair(rng, max_size=32)
    perm_g = np.concatenate([[0], rng.permutation(np.arange(1, 5)) + 10])
    perm_d = np.concatenate([[0], rng.permutation(np.arange(1, 5)) + 20])
    base = metrics.consistent_true_positive(gt, dm)
    relabelled = metrics.consistent_true_positive(perm_g[gt], perm_d[dm])
    # relabelling gt can only change which of two equal-size matches wins, not the total
    assert relabelled == base


def test_tie_goes_to_smaller_gt_id_and_counts_once():
    gt = np.zeros((10, 20), np.int32)
    gt[0:2, 0:2] = 1
    gt[0:2, 5:7] = 1
    gt[5:7, 0:2] = 2
    gt[5:7, 5:7] = 2
    dm = (gt > 0).astype(np.int32)
    assert metrics.consistent_true_positive(gt, dm) == 8


def test_detected_region_touching_one_component_is_not_consistent():
    gt = np.zeros((10, 20), np.int32)
    gt[0:3, 0:3] = 1
    gt[0:3, 10:13] = 1
    dm = np.zeros_like(gt)
    dm[0:3, 0:3] = 1
    dm[0:3, 10:13] = 2
    r = metrics.evaluate_figure(gt, dm)
    assert r.counts.tp == 18 and r.counts.ctp == 0 and r.f1_ctp == 0.0


def test_idless_mode_pairs_everything():
    gt = np.zeros((10, 20), np.int32)
    gt[0:3, 0:3] = 1
    gt[0:3, 10:13] = 1
    dm = np.zeros_like(gt)
    dm[0:3, 0:3] = 1
    dm[0:3, 10:13] = 2
    assert metrics.evaluate_figure(gt, dm, mode="idless").f1_ctp == 1.0
    with pytest.raises(ValueError):
        metrics.evaluate_figure(gt, dm, mode="other")


def test_zero_denominators_score_zero():
    z = np.zeros((4, 4), np.int32)
    r = metrics.evaluate_figure(z, z)
    assert (r.f1_tp, r.f1_ctp, r.precision_tp, r.precision_ctp) == (0.0, 0.0, 0.0, 0.0)


def test_binarize_min_max_then_threshold():
    soft = np.array([[0.0, 0.39], [0.4, 1.0]])
    # 0.39*255 = 99.45 -> 99 (not > 100), 0.4*255 = 102 -> positive
    assert metrics.binarize_detection(soft).tolist() == [[0, 0], [1, 1]]
    assert not metrics.binarize_detection(np.full((3, 3), 7.0)).any()


def test_shape_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        metrics.evaluate_figure(np.zeros((3, 3), np.int32), np.zeros((3, 4), np.int32))


def _rec(fid, f1, modality="copy_move", verbosity=0, tp=1, fp=0):
    counts = metrics.ConfusionCounts(tp, fp, 0, 0, tp)
    return metrics.ScoreRecord(fid, modality, modality, verbosity, counts, f1, f1, f1, f1, "simple")


def test_aggregate_mean_and_pooled():
    recs = [_rec("a", 1.0), _rec("b", 0.0, tp=0, fp=3), _rec("c", 1.0, modality="splicing")]
    rows = metrics.aggregate_scores(recs)
    assert [(r["modality"], r["n"], r["f1_ctp"]) for r in rows] == [("copy_move", 2, 50.0), ("splicing", 1, 100.0)]
    pooled = metrics.aggregate_scores(recs, pooled=True)
    assert pooled[0]["precision_tp"] == pytest.approx(25.0)
    with pytest.raises(ValueError):
        metrics.aggregate_scores([])


def test_score_csv_round_trip(tmp_path):
    rows = metrics.aggregate_scores([_rec("a", 1 / 3)], metrics.DEFAULT_GROUP)
    metrics.write_score_csv(rows, tmp_path / "s.csv")
    text = (tmp_path / "s.csv").read_text()
    assert text.splitlines()[0] == "complexity,modality,submodality,verbosity,n,f1_tp,f1_ctp,precision_tp,precision_ctp"
    assert "33.33" in text
    assert metrics.read_score_csv(tmp_path / "s.csv")[0]["f1_ctp"] == 33.33
