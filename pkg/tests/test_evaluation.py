import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from motiongroup.evaluation import (GroundTruth, SelectionMetrics, aggregate_metrics,
                                    load_external_saliency, load_ground_truth, selection_metrics,
                                    sequence_curve, threshold_sweep, write_curves_csv,
                                    write_summary_json)
from motiongroup.volume import FrameError, write_image

from oracles import pixel_count_rates


maps_and_gts = st.integers(1, 12).flatmap(lambda h: st.integers(1, 12).flatmap(lambda w: st.tuples(
    arrays(np.uint8, (h, w)), arrays(np.bool_, (h, w)))))


@settings(max_examples=60, deadline=None)
@given(maps_and_gts, st.integers(2, 40))
def test_sweep_matches_pixel_count(pair, levels):
    m, gt = pair
    for p in threshold_sweep(m, GroundTruth(0, gt), levels):
        assert (p.tp_rate, p.fp_rate) == pytest.approx(pixel_count_rates(m, gt, p.threshold), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(maps_and_gts)
def test_monotone_and_endpoints(pair):
    m, gt = pair
    pts = threshold_sweep(m, gt)
    tp = [p.tp_rate for p in pts]
    fp = [p.fp_rate for p in pts]
    assert all(a >= b for a, b in zip(tp, tp[1:]))
    assert all(a >= b for a, b in zip(fp, fp[1:]))
    assert pts[0].threshold == 0 and pts[-1].threshold == 255 and len(pts) == 256
    assert (pts[-1].tp_rate, pts[-1].fp_rate) == ((0.0 if gt.any() else 1.0), 0.0)
    for p in pts:
        assert 0 <= p.tp_rate <= 1 and 0 <= p.fp_rate <= 1


@settings(max_examples=60, deadline=None)
@given(maps_and_gts)
def test_selection_matches_sweep_at_128(pair):
    mask, gt = pair[1], pair[0] > 127
    sm = selection_metrics(mask, gt)
    (p,) = [p for p in threshold_sweep(mask.astype(np.uint8) * 255, gt, levels=256) if p.threshold == 128]
    assert (sm.tp_rate, sm.fp_rate) == (p.tp_rate, p.fp_rate)


def test_sweep_examples():
    gt = np.zeros((4, 4), bool)
    gt[1:3, 1:3] = True
    ideal = np.where(gt, 255, 0).astype(np.uint8)
    mid = [p for p in threshold_sweep(ideal, gt) if 0 < p.threshold < 255]
    assert all((p.tp_rate, p.fp_rate) == (1.0, 0.0) for p in mid)
    uniform = np.full((4, 4), 100, np.uint8)
    pts = {(p.tp_rate, p.fp_rate) for p in threshold_sweep(uniform, gt)}
    assert pts == {(1.0, 1.0), (0.0, 0.0)}


def test_float_map_uses_its_maximum():
    m = np.array([[0.0, 0.5], [1.0, 0.25]])
    gt = np.array([[False, False], [True, False]])
    pts = threshold_sweep(m, gt, levels=5)
    assert [p.threshold for p in pts] == [0, 0.25, 0.5, 0.75, 1.0]
    assert [p.fp_rate for p in pts] == pytest.approx([2 / 3, 1 / 3, 0, 0, 0])


def test_selection_examples():
    gt = np.zeros((3, 3), bool)
    gt[0] = True
    assert selection_metrics(gt, gt) == SelectionMetrics(1.0, 0.0)
    assert selection_metrics(np.zeros_like(gt), gt) == SelectionMetrics(0.0, 0.0)
    assert selection_metrics(~gt, gt) == SelectionMetrics(0.0, 1.0)
    empty = selection_metrics(gt, np.zeros_like(gt))
    assert empty.tp_rate == 1.0 and empty.empty_gt
    with pytest.raises(ValueError):
        selection_metrics(gt, np.zeros((2, 2), bool))
    with pytest.raises(ValueError):
        threshold_sweep(np.zeros((2, 2)), gt)


def test_aggregate_is_mean():
    agg = aggregate_metrics([SelectionMetrics(1.0, 0.0), SelectionMetrics(0.5, 0.1, True)])
    assert agg.tp_rate == 0.75 and agg.fp_rate == pytest.approx(0.05) and agg.empty_gt
    with pytest.raises(ValueError):
        aggregate_metrics([])


def test_sequence_curve_per_threshold_mean():
    rng = np.random.default_rng(3)
    maps = {i: rng.integers(0, 256, (6, 7), dtype=np.uint8) for i in range(4)}
    truths = {i: GroundTruth(i, rng.random((6, 7)) < 0.3) for i in range(4)}
    th, tp, fp = sequence_curve(maps, truths, levels=16)
    for k, theta in enumerate(th):
        rates = np.array([pixel_count_rates(maps[i], truths[i].mask, theta) for i in range(4)])
        assert (tp[k], fp[k]) == pytest.approx(rates.mean(axis=0))
    with pytest.raises(FrameError):
        sequence_curve(maps, {0: truths[0]})


def test_external_maps_and_ground_truth(tmp_path):
    for i in range(3):
        write_image(tmp_path / f"frame_{i:04d}.png", np.full((5, 6), 40 * i, np.uint8))
    maps = load_external_saliency(tmp_path)
    assert sorted(maps) == [0, 1, 2] and maps[2][0, 0] == 80
    with pytest.raises(FrameError):
        load_external_saliency(tmp_path, shape=(6, 5))
    with pytest.raises(FrameError):
        load_external_saliency(tmp_path / "missing")
    gts = load_ground_truth(tmp_path)
    assert not gts[0].mask.any() and not gts[2].mask.any()


def test_single_map_single_curve(tmp_path):
    gt = np.zeros((4, 4), bool)
    gt[0, 0] = True
    write_image(tmp_path / "frame_0007.png", np.where(gt, 255, 0).astype(np.uint8))
    maps = load_external_saliency(tmp_path)
    th, tp, fp = sequence_curve(maps, {7: GroundTruth(7, gt)})
    assert len(th) == 256 and tp[100] == 1.0 and fp[100] == 0.0


def test_output_files(tmp_path):
    curves = {"m": (np.array([0.0, 1.0]), np.array([1.0, 0.0]), np.array([0.5, 0.0]))}
    write_curves_csv(tmp_path / "c.csv", curves)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "method,threshold,tp_rate,fp_rate"
    assert lines[1] == "m,0,1.000000,0.500000"
    write_summary_json(tmp_path / "s.json", {"sel": SelectionMetrics(0.9, 0.01)})
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["operating_points"]["sel"] == {"tp_rate": 0.9, "fp_rate": 0.01, "empty_gt_frames": False}
