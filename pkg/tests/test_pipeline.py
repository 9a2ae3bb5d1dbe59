import csv
import dataclasses
import hashlib
import os

import numpy as np
import pytest

from salseg import pipeline, synth
from salseg.metrics import iou
from salseg.pipeline import (ExperimentConfig, SalientGroundTruth,
                             build_targets, compose_topk, ksweep,
                             load_clicks, load_dataset, load_energy_map,
                             load_ground_truth, run_experiment,
                             upper_bound_segmenter, upper_bound_selector)
from salseg.proposals import SegmentCandidate, SegmentPool


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    index = synth.synth_dataset(12, 64, 48, seed=5, root=str(root))
    return index


def test_load_dataset_structure(dataset):
    assert len(dataset.image_ids) == 12
    assert dataset.image_ids == sorted(dataset.image_ids)
    assert dataset.gaze_subjects == ["s%02d" % i for i in range(1, 9)]
    for image_id in dataset.image_ids:
        assert os.path.exists(dataset.image_paths[image_id])


def test_load_dataset_rejects_missing_root(tmp_path):
    with pytest.raises(ValueError):
        load_dataset(str(tmp_path / "nope"))


def test_ground_truth_saliency_levels(dataset):
    clicks = load_clicks(dataset)
    saw_salient = False
    for image_id in dataset.image_ids:
        gt = load_ground_truth(dataset, image_id, clicks)
        for s in gt.saliency:
            assert 0.0 <= s <= 1.0
            assert abs(s * 12 - round(s * 12)) < 1e-9  # twelfths
        combined = np.zeros_like(gt.combined)
        for s, m in zip(gt.saliency, gt.object_masks):
            if s >= 0.5:
                combined |= m
        assert np.array_equal(gt.combined, combined)
        saw_salient = saw_salient or combined.any()
    assert saw_salient


def test_gt_objects_planted_in_pools(dataset):
    clicks = load_clicks(dataset)
    for image_id in dataset.image_ids[:4]:
        gt = load_ground_truth(dataset, image_id, clicks)
        pool = pipeline.load_pool(
            os.path.join(dataset.root, "segments", image_id), image_id)
        for obj in gt.object_masks:
            assert any(np.array_equal(c.mask, obj) for c in pool.candidates)


def test_fixations_denser_inside_objects(dataset):
    clicks = load_clicks(dataset)
    in_count = out_count = 0
    in_area = out_area = 0
    for image_id in dataset.image_ids:
        gt = load_ground_truth(dataset, image_id, clicks)
        union = np.zeros_like(gt.combined)
        for m in gt.object_masks:
            union |= m
        sets = pipeline.load_fixation_sets(dataset, image_id)
        for fs in sets:
            for f in fs.fixations:
                x = min(max(int(round(f.x)), 0), union.shape[1] - 1)
                y = min(max(int(round(f.y)), 0), union.shape[0] - 1)
                if union[y, x]:
                    in_count += 1
                else:
                    out_count += 1
        in_area += union.sum()
        out_area += (~union).sum()
    assert in_count / in_area > 2.0 * out_count / out_area


def _tree_digest(root):
    h = hashlib.sha256()
    for dirpath, dirnames, filenames in sorted(os.walk(root)):
        dirnames.sort()
        for name in sorted(filenames):
            path = os.path.join(dirpath, name)
            h.update(os.path.relpath(path, root).encode())
            with open(path, "rb") as f:
                h.update(f.read())
    return h.hexdigest()


def test_synth_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    synth.synth_dataset(10, 48, 36, seed=9, root=str(a))
    synth.synth_dataset(10, 48, 36, seed=9, root=str(b))
    assert _tree_digest(a) == _tree_digest(b)


def test_synth_rejects_degenerate_requests(tmp_path):
    with pytest.raises(ValueError):
        synth.synth_dataset(5, 64, 48, seed=0, root=str(tmp_path / "few"))
    with pytest.raises(ValueError):
        synth.synth_dataset(10, 8, 8, seed=0, root=str(tmp_path / "small"))


def _toy_gt():
    obj = np.zeros((10, 10), dtype=bool)
    obj[2:6, 2:7] = True  # 20 pixels
    return SalientGroundTruth(["01"], [obj], [1.0], [obj], obj.copy())


def test_build_targets_values():
    gt = _toy_gt()
    obj = gt.object_masks[0]
    half = np.zeros((10, 10), dtype=bool)
    half[2:6, 2:4] = True
    half[2:4, 4] = True  # 10 of the object's 20 pixels
    assert half.sum() == 10 and (half & obj).sum() == 10
    far = np.zeros((10, 10), dtype=bool)
    far[8:10, 8:10] = True
    pool = SegmentPool("t", [
        SegmentCandidate(obj.copy(), 1, "external"),
        SegmentCandidate(far, 2, "external"),
        SegmentCandidate(half, 3, "external"),
    ])
    rows = build_targets(pool, gt, np.zeros((10, 10)))
    targets = [t for _, t in rows]
    assert targets[0] == 1.0
    assert targets[1] == 0.0
    assert targets[2] == 0.5
    assert all(len(v) == 33 for v, _ in rows)


def test_compose_topk_selection_rules():
    a = np.zeros((4, 4), dtype=bool)
    a[0] = True
    b = np.zeros((4, 4), dtype=bool)
    b[1] = True
    pool = SegmentPool("t", [SegmentCandidate(a, 1, "external"),
                             SegmentCandidate(b, 2, "external"),
                             SegmentCandidate(a.copy(), 3, "external")])
    top1 = compose_topk(pool, [0.9, 0.5, 0.1], 1)
    assert np.array_equal(top1, a.astype(float))
    # ties by score go to the lower external rank
    tied = compose_topk(pool, [0.5, 0.5, 0.5], 1)
    assert np.array_equal(tied, a.astype(float))
    # two identical selected masks average back to a 0/1 map
    twin = compose_topk(pool, [0.9, 0.1, 0.9], 2)
    assert np.array_equal(twin, a.astype(float))
    # K beyond the pool averages the whole pool
    full = compose_topk(pool, [0.9, 0.5, 0.1], 99)
    assert np.array_equal(full, (2 * a + b) / 3.0)


def test_compose_topk_value_grid():
    rng = np.random.default_rng(60)
    for _ in range(10):
        masks = [rng.random((5, 5)) < 0.5 for _ in range(6)]
        masks = [m for m in masks if m.any()] or \
            [np.ones((5, 5), dtype=bool)]
        pool = SegmentPool("t", [SegmentCandidate(m, i + 1, "external")
                                 for i, m in enumerate(masks)])
        k = int(rng.integers(1, 8))
        scores = rng.random(len(masks)).tolist()
        m = compose_topk(pool, scores, k)
        chosen = min(k, len(masks))
        grid = np.round(m * chosen)
        assert np.all(np.abs(grid / chosen - m) < 1e-12)
        assert m.min() >= 0.0 and m.max() <= 1.0


def test_compose_topk_errors():
    pool = SegmentPool("t", [SegmentCandidate(np.ones((2, 2), dtype=bool),
                                              1, "external")])
    with pytest.raises(ValueError):
        compose_topk(SegmentPool("t", []), [], 1)
    with pytest.raises(ValueError):
        compose_topk(pool, [0.5, 0.5], 1)
    with pytest.raises(ValueError):
        compose_topk(pool, [0.5], 0)


def test_run_experiment_shape_and_determinism(dataset):
    cfg = ExperimentConfig(k=5, n_folds=3, n_trees=8, seed=2)
    res1 = run_experiment(dataset, cfg)
    res2 = run_experiment(dataset, cfg)
    assert len(res1.fold_f) == 3
    assert all(0.0 <= f <= 1.0 for f in res1.fold_f)
    assert res1.fold_f == res2.fold_f
    assert res1.mean_f == pytest.approx(np.mean(res1.fold_f))
    res3 = run_experiment(dataset, dataclasses.replace(cfg, seed=3))
    assert res1.fold_f != res3.fold_f


def test_ksweep_consistent_with_run_experiment(dataset):
    cfg = ExperimentConfig(k=4, n_folds=2, n_trees=6, seed=1)
    direct = run_experiment(dataset, cfg)
    pairs = ksweep(dataset, cfg, [4])
    assert pairs[0][0] == 4
    assert pairs[0][1] == pytest.approx(direct.mean_f, abs=1e-15)
    many = ksweep(dataset, cfg, [1, 4, 9])
    assert all(0.0 <= f <= 1.0 for _, f in many)


def test_training_ignores_test_targets(dataset):
    cfg = ExperimentConfig(k=5, n_folds=1, n_trees=6, seed=4)
    prep = pipeline.prepare_images(dataset, cfg)
    base = pipeline._run_folds(prep, cfg, [5], "model")

    # replay the fold seeding to find the test images of the only fold
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(len(prep))
    n_train = int(round(cfg.train_fraction * len(prep)))
    corrupted = pipeline.prepare_images(dataset, cfg)
    for i in perm[n_train:]:
        corrupted[i].targets[:] = 0.123
    redo = pipeline._run_folds(corrupted, cfg, [5], "model")
    assert base == redo


def test_external_rank_score_mode(dataset):
    cfg = ExperimentConfig(k=3, n_folds=2, seed=0)
    res = run_experiment(dataset, cfg, score_mode="external-rank")
    assert len(res.fold_f) == 2
    assert all(0.0 <= f <= 1.0 for f in res.fold_f)
    with pytest.raises(ValueError):
        run_experiment(dataset, cfg, score_mode="bogus")


def test_upper_bound_selector_uses_gt_pools(dataset):
    cfg = ExperimentConfig(k=1, n_folds=2, n_trees=8, seed=3)
    res = upper_bound_selector(dataset, cfg)
    assert res.mean_f > 0.5


def test_upper_bound_segmenter_perfect_on_planted_pools(dataset):
    assert upper_bound_segmenter(dataset) == 1.0


def test_upper_bound_segmenter_monotone_in_first_n(dataset):
    full = upper_bound_segmenter(dataset)
    limited = upper_bound_segmenter(dataset, first_n=2)
    assert full >= limited - 1e-12


def test_degenerate_split_rejected(dataset):
    cfg = ExperimentConfig(k=3, n_folds=1, train_fraction=0.01, seed=0)
    with pytest.raises(ValueError):
        run_experiment(dataset, cfg)


def test_load_energy_map_sources(dataset):
    image_id = dataset.image_ids[0]
    cfg = ExperimentConfig(fixation_source="human")
    human = load_energy_map(dataset, image_id, cfg, (48, 64))
    assert human.shape == (48, 64)
    assert human.sum() > 0
    assert np.all(human == np.round(human))  # count map

    cfg_map = ExperimentConfig(fixation_source="map:center")
    m = load_energy_map(dataset, image_id, cfg_map, (48, 64))
    assert m.shape == (48, 64)
    assert 0.0 <= m.min() and m.max() <= 1.0

    with pytest.raises(ValueError):
        load_energy_map(dataset, image_id,
                        ExperimentConfig(fixation_source="wat"), (48, 64))


def test_clicks_header_strict(tmp_path):
    root = tmp_path / "bad"
    (root / "images").mkdir(parents=True)
    (root / "objects" / "img0000").mkdir(parents=True)
    from salseg import raster
    raster.write_ppm(root / "images" / "img0000.ppm",
                     np.zeros((4, 4, 3), dtype=np.uint8))
    raster.write_mask(root / "objects" / "img0000" / "01.pgm",
                      np.ones((4, 4), dtype=bool))
    (root / "clicks.csv").write_text("img,obj,who,hit\n")
    index = load_dataset(str(root))
    with pytest.raises(ValueError):
        load_clicks(index)


def test_write_ksweep_csv(tmp_path):
    p = tmp_path / "ksweep.csv"
    pipeline.write_ksweep_csv(p, [(1, 0.5), (5, 0.75)])
    with open(p) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["K", "F"]
    assert rows[1][0] == "1"
    assert float(rows[2][1]) == 0.75


def test_ground_truth_pool_matches_objects(dataset):
    clicks = load_clicks(dataset)
    image_id = dataset.image_ids[0]
    gt = load_ground_truth(dataset, image_id, clicks)
    pool = pipeline.ground_truth_pool(gt, image_id)
    assert len(pool.candidates) == len(gt.object_masks)
    for c, m in zip(pool.candidates, gt.object_masks):
        assert iou(c.mask, m) == 1.0
        assert c.source == "ground-truth"
