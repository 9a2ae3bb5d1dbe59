"""End-to-end orchestration: dataset access, targets, top-K maps, experiments.

A dataset lives under one root directory:

    images/<image-id>.ppm|.png      input images
    objects/<image-id>/NN.pgm       per-object ground-truth masks
    clicks.csv                      image,object,subject,clicked
    fixations/<subject>/<image-id>.csv   gaze logs (t_ms,x,y,valid)
    segments/<image-id>/NNN.pgm     proposal pools
    maps/<algorithm>/<image-id>.pgm external saliency or fixation maps

Per-object saliency is the number of subjects who clicked the object divided
by the number of click subjects; objects at or above 0.5 form the combined
salient ground-truth mask.
"""

import csv
import dataclasses
import os

import numpy as np

from . import fixproc
from .fixproc import FixationSet, accumulate_energy, detect_fixations, read_gaze_csv
from .forest import ForestParams, predict_many
from .forest import train as train_forest
from .metrics import dataset_f, iou
from .proposals import SegmentCandidate, SegmentPool, load_pool
from .raster import load_image, read_map, read_mask
from .segfeat import extract

SALIENCY_THRESHOLD = 0.5


@dataclasses.dataclass
class DatasetIndex:
    """Resolved layout of one dataset root."""
    root: str
    image_ids: list
    image_paths: dict
    gaze_subjects: list


@dataclasses.dataclass
class SalientGroundTruth:
    """Per-object masks and saliency values, and the combined salient mask."""
    object_ids: list
    object_masks: list
    saliency: list
    salient_masks: list
    combined: np.ndarray


@dataclasses.dataclass
class ExperimentConfig:
    k: int = 20
    train_fraction: float = 0.4
    n_folds: int = 10
    fixation_source: str = "human"  # or "map:<algorithm>"
    center_bias_sigma: float = fixproc.CENTER_BIAS_SIGMA_FRAC
    mask_threshold: float = 0.5
    seed: int = 0
    n_trees: int = 30
    mtry: int = None
    min_leaf: int = 5
    max_depth: int = None
    first_n: int = 200


@dataclasses.dataclass
class ExperimentResult:
    fold_f: list
    mean_f: float


def load_dataset(root):
    """Index a dataset root; every image id must resolve to an image file."""
    images_dir = os.path.join(root, "images")
    if not os.path.isdir(images_dir):
        raise ValueError("missing images directory under %s" % root)
    paths = {}
    for name in sorted(os.listdir(images_dir)):
        stem, ext = os.path.splitext(name)
        if ext.lower() in (".ppm", ".png"):
            paths[stem] = os.path.join(images_dir, name)
    if not paths:
        raise ValueError("no images under %s" % images_dir)
    fix_dir = os.path.join(root, "fixations")
    subjects = sorted(os.listdir(fix_dir)) if os.path.isdir(fix_dir) else []
    return DatasetIndex(root, sorted(paths), paths, subjects)


def load_clicks(index):
    """Read clicks.csv into ((image, object) -> click count, subject count)."""
    path = os.path.join(index.root, "clicks.csv")
    if not os.path.exists(path):
        raise ValueError("missing clicks.csv under %s" % index.root)
    counts = {}
    subjects = set()
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["image", "object", "subject", "clicked"]:
            raise ValueError("%s: expected header image,object,subject,clicked"
                             % path)
        for row in reader:
            if not row:
                continue
            image, obj, subject, clicked = row
            subjects.add(subject)
            if int(clicked):
                counts[(image, obj)] = counts.get((image, obj), 0) + 1
    if not subjects:
        raise ValueError("%s: no click subjects" % path)
    return counts, len(subjects)


def load_click_details(index):
    """Read clicks.csv into ((image, subject) -> set of object ids, subjects)."""
    path = os.path.join(index.root, "clicks.csv")
    if not os.path.exists(path):
        raise ValueError("missing clicks.csv under %s" % index.root)
    details = {}
    subjects = set()
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["image", "object", "subject", "clicked"]:
            raise ValueError("%s: expected header image,object,subject,clicked"
                             % path)
        for row in reader:
            if not row:
                continue
            image, obj, subject, clicked = row
            subjects.add(subject)
            if int(clicked):
                details.setdefault((image, subject), set()).add(obj)
    return details, sorted(subjects)


def subject_click_masks(gt, image_id, details, subjects):
    """Per-subject binary masks: the union of the objects each subject clicked."""
    masks = []
    for subject in subjects:
        clicked = details.get((image_id, subject), set())
        mask = np.zeros_like(gt.combined)
        for oid, obj_mask in zip(gt.object_ids, gt.object_masks):
            if oid in clicked:
                mask |= obj_mask
        masks.append(mask)
    return masks


def load_ground_truth(index, image_id, clicks=None):
    """Ground truth for one image: object masks, saliency, combined mask."""
    obj_dir = os.path.join(index.root, "objects", image_id)
    if not os.path.isdir(obj_dir):
        raise ValueError("missing ground truth for image %s" % image_id)
    if clicks is None:
        clicks = load_clicks(index)
    counts, n_subjects = clicks
    object_ids = sorted(os.path.splitext(n)[0] for n in os.listdir(obj_dir)
                        if n.endswith(".pgm"))
    if not object_ids:
        raise ValueError("no object masks for image %s" % image_id)
    masks = [read_mask(os.path.join(obj_dir, oid + ".pgm"))
             for oid in object_ids]
    saliency = [counts.get((image_id, oid), 0) / n_subjects
                for oid in object_ids]
    salient = [m for m, s in zip(masks, saliency) if s >= SALIENCY_THRESHOLD]
    combined = np.zeros_like(masks[0])
    for m in salient:
        combined |= m
    return SalientGroundTruth(object_ids, masks, saliency, salient, combined)


def load_fixation_sets(index, image_id):
    """Detected fixations of every subject with a gaze log for the image."""
    sets = []
    for subject in index.gaze_subjects:
        path = os.path.join(index.root, "fixations", subject,
                            image_id + ".csv")
        if not os.path.exists(path):
            continue
        fixations = detect_fixations(read_gaze_csv(path))
        sets.append(FixationSet(image_id, subject, fixations))
    return sets


def load_energy_map(index, image_id, cfg, shape):
    """Fixation energy for features: human count map or an external map."""
    h, w = shape
    if cfg.fixation_source == "human":
        return accumulate_energy(load_fixation_sets(index, image_id), w, h)
    if cfg.fixation_source.startswith("map:"):
        algorithm = cfg.fixation_source[4:]
        path = os.path.join(index.root, "maps", algorithm, image_id + ".pgm")
        if not os.path.exists(path):
            raise ValueError("missing map %s for image %s" % (algorithm,
                                                              image_id))
        return read_map(path)
    raise ValueError("unknown fixation source %r" % cfg.fixation_source)


def ground_truth_pool(gt, image_id=""):
    """A pool holding the per-object ground-truth masks, ranked in object order."""
    candidates = [SegmentCandidate(mask, rank + 1, "ground-truth")
                  for rank, mask in enumerate(gt.object_masks)]
    return SegmentPool(image_id, candidates)


def build_targets(pool, gt, energy):
    """(feature vector, target) rows for a pool.

    The target of a candidate is its best IoU against the salient ground-truth
    objects (the objects forming the combined evaluation mask).
    """
    rows = []
    for cand in pool.candidates:
        vec = extract(cand.mask, energy)
        target = 0.0
        for obj in gt.salient_masks:
            target = max(target, iou(cand.mask, obj))
        rows.append((vec, target))
    return rows


def compose_topk(pool, scores, k):
    """Pixelwise mean of the k highest-scoring candidate masks.

    Ties between equal scores go to the lower external rank; when k exceeds
    the pool size the whole pool is averaged.
    """
    if not pool.candidates:
        raise ValueError("empty pool")
    if len(scores) != len(pool.candidates):
        raise ValueError("scores length differs from pool size")
    if k < 1:
        raise ValueError("k must be >= 1")
    order = sorted(range(len(scores)),
                   key=lambda i: (-scores[i], pool.candidates[i].external_rank))
    chosen = order[:min(k, len(order))]
    m = np.zeros(pool.candidates[0].mask.shape, dtype=np.float64)
    for i in chosen:
        m += pool.candidates[i].mask
    return m / len(chosen)


@dataclasses.dataclass
class _ImageData:
    image_id: str
    pool: SegmentPool
    combined: np.ndarray
    features: np.ndarray
    targets: np.ndarray


def prepare_images(index, cfg, pools=None):
    """Load pool, ground truth, energy, features, and targets for every image."""
    clicks = load_clicks(index)
    prep = []
    for image_id in index.image_ids:
        img = load_image(index.image_paths[image_id])
        gt = load_ground_truth(index, image_id, clicks)
        if pools is not None:
            pool = pools[image_id]
        else:
            pool = load_pool(os.path.join(index.root, "segments", image_id),
                             image_id)
        energy = load_energy_map(index, image_id, cfg, img.shape[:2])
        rows = build_targets(pool, gt, energy)
        prep.append(_ImageData(image_id, pool, gt.combined,
                               np.array([r[0] for r in rows]),
                               np.array([r[1] for r in rows])))
    return prep


def _forest_params(cfg):
    return ForestParams(n_trees=cfg.n_trees, mtry=cfg.mtry,
                        min_leaf=cfg.min_leaf, max_depth=cfg.max_depth)


def _run_folds(prep, cfg, ks, score_mode):
    """Per-fold training and scoring at every requested K.

    Folds and forests are shared across the K values; score_mode
    "external-rank" skips training and scores candidates by their negated
    generator rank instead.
    """
    n = len(prep)
    rng = np.random.default_rng(cfg.seed)
    results = {k: [] for k in ks}
    for _ in range(cfg.n_folds):
        perm = rng.permutation(n)
        forest_seed = int(rng.integers(2 ** 31))
        n_train = int(round(cfg.train_fraction * n))
        if n_train < 1 or n_train >= n:
            raise ValueError("degenerate train/test split")
        train_items = [prep[i] for i in perm[:n_train]]
        test_items = [prep[i] for i in perm[n_train:]]
        if score_mode == "model":
            rows = []
            for item in train_items:
                rows.extend(zip(item.features, item.targets))
            forest = train_forest(rows, _forest_params(cfg), seed=forest_seed)
            scores = [predict_many(forest, item.features)
                      for item in test_items]
        elif score_mode == "external-rank":
            scores = [[-c.external_rank for c in item.pool.candidates]
                      for item in test_items]
        else:
            raise ValueError("unknown score mode %r" % score_mode)
        gts = [item.combined for item in test_items]
        for k in ks:
            maps = [compose_topk(item.pool, s, k)
                    for item, s in zip(test_items, scores)]
            results[k].append(dataset_f(maps, gts))
    return results


def run_experiment(index, cfg, pools=None, score_mode="model"):
    """Train on a fraction of the images and score the rest, over n_folds splits."""
    prep = prepare_images(index, cfg, pools)
    folds = _run_folds(prep, cfg, [cfg.k], score_mode)[cfg.k]
    return ExperimentResult(folds, float(np.mean(folds)))


def ksweep(index, cfg, ks, pools=None, score_mode="model"):
    """Mean F at each K, reusing the same folds and forests across the list."""
    prep = prepare_images(index, cfg, pools)
    results = _run_folds(prep, cfg, list(ks), score_mode)
    return [(k, float(np.mean(results[k]))) for k in ks]


def upper_bound_selector(index, cfg):
    """run_experiment with pools replaced by the ground-truth object segments
    and human fixations as the energy source."""
    cfg = dataclasses.replace(cfg, fixation_source="human")
    clicks = load_clicks(index)
    pools = {}
    for image_id in index.image_ids:
        gt = load_ground_truth(index, image_id, clicks)
        pools[image_id] = ground_truth_pool(gt, image_id)
    return run_experiment(index, cfg, pools=pools)


def upper_bound_segmenter(index, first_n=200, pools=None):
    """F-measure of the best-overlap candidates: per salient object, the best
    candidate among ranks <= first_n; the union of picks scores the image."""
    from .proposals import best_overlap_selection
    clicks = load_clicks(index)
    maps = []
    gts = []
    for image_id in index.image_ids:
        gt = load_ground_truth(index, image_id, clicks)
        if pools is not None:
            pool = pools[image_id]
        else:
            pool = load_pool(os.path.join(index.root, "segments", image_id),
                             image_id)
        union = np.zeros_like(gt.combined)
        for cand in best_overlap_selection(pool, gt.salient_masks, first_n):
            union |= cand.mask
        maps.append(union.astype(np.float64))
        gts.append(gt.combined)
    return dataset_f(maps, gts)


def write_ksweep_csv(path, rows):
    """Write a K sweep as CSV: K,F."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["K", "F"])
        for k, value in rows:
            writer.writerow([k, "%.6f" % value])
