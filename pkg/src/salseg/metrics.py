"""Benchmark scores: PR curves, F-measure, ROC AUC, shuffled AUC, IoU, consistency.

PR aggregation is pooled: TP/FP/FN are accumulated over the whole dataset at
each of 256 threshold levels before precision and recall are formed. Per-image
averaging is available behind a flag for sensitivity checks.
"""

import csv
import dataclasses

import numpy as np
from scipy.stats import rankdata

from .fixproc import render_fixation_map
from .raster import threshold

N_THRESHOLDS = 256
THRESHOLDS = np.linspace(0.0, 1.0, N_THRESHOLDS)
BETA_SQ = 0.3
DEFAULT_NEG_RATIO = 10
DEFAULT_SAUC_SPLITS = 100


@dataclasses.dataclass
class PrCurve:
    """Precision and recall at 256 evenly spaced thresholds in [0, 1]."""
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray


def _level_counts(m, gt):
    """Per-threshold positive-prediction counts split by ground-truth label.

    For each pixel, the number of grid thresholds it passes is
    searchsorted(THRESHOLDS, value, side='right'); binning those counts and
    suffix-summing yields exact integer TP and FP at every threshold.
    """
    v = np.asarray(m, dtype=np.float64).ravel()
    g = np.asarray(gt, dtype=bool).ravel()
    c = np.searchsorted(THRESHOLDS, v, side="right")
    tp_hist = np.bincount(c[g], minlength=N_THRESHOLDS + 1)
    fp_hist = np.bincount(c[~g], minlength=N_THRESHOLDS + 1)
    tp = np.cumsum(tp_hist[::-1])[::-1][1:]
    fp = np.cumsum(fp_hist[::-1])[::-1][1:]
    return tp, fp, int(g.sum())


def _pr_from_counts(tp, fp, n_pos):
    pred = tp + fp
    precision = np.ones(N_THRESHOLDS, dtype=np.float64)
    nz = pred > 0
    precision[nz] = tp[nz] / pred[nz]
    if n_pos > 0:
        recall = tp / float(n_pos)
    else:
        recall = np.ones(N_THRESHOLDS, dtype=np.float64)
    return precision, recall


def pr_curve(maps, gts, per_image=False):
    """Dataset PR curve over 256 thresholds.

    Precision is defined as 1 where no pixel is predicted positive; recall is
    vacuously 1 when the ground truth has no positive pixel. With
    per_image=True, per-image precision and recall are averaged instead of
    pooling the counts.
    """
    if len(maps) == 0:
        raise ValueError("empty map list")
    if len(maps) != len(gts):
        raise ValueError("map and ground-truth lists differ in length")
    for m, g in zip(maps, gts):
        if np.shape(m) != np.shape(g):
            raise ValueError("map and ground-truth dimensions differ")
    if per_image:
        ps = np.zeros(N_THRESHOLDS)
        rs = np.zeros(N_THRESHOLDS)
        for m, g in zip(maps, gts):
            tp, fp, n_pos = _level_counts(m, g)
            p, r = _pr_from_counts(tp, fp, n_pos)
            ps += p
            rs += r
        return PrCurve(THRESHOLDS.copy(), ps / len(maps), rs / len(maps))
    tp_all = np.zeros(N_THRESHOLDS, dtype=np.int64)
    fp_all = np.zeros(N_THRESHOLDS, dtype=np.int64)
    n_pos_all = 0
    for m, g in zip(maps, gts):
        tp, fp, n_pos = _level_counts(m, g)
        tp_all += tp
        fp_all += fp
        n_pos_all += n_pos
    p, r = _pr_from_counts(tp_all, fp_all, n_pos_all)
    return PrCurve(THRESHOLDS.copy(), p, r)


def f_measure(p, r, beta_sq=BETA_SQ):
    """Weighted F-measure (1+b)PR/(bP+R); 0 whenever recall is 0."""
    if r == 0:
        return 0.0
    return (1.0 + beta_sq) * p * r / (beta_sq * p + r)


def dataset_f(maps, gts, beta_sq=BETA_SQ, per_image=False):
    """Maximum F-measure over the 256 points of the dataset PR curve."""
    curve = pr_curve(maps, gts, per_image=per_image)
    best = 0.0
    for p, r in zip(curve.precision, curve.recall):
        best = max(best, f_measure(p, r, beta_sq))
    return best


def _coord_values(m, coords, name):
    c = np.asarray(coords)
    if c.size == 0:
        raise ValueError("empty %s list" % name)
    c = c.reshape(-1, 2).astype(np.int64)
    return np.asarray(m, dtype=np.float64)[c[:, 1], c[:, 0]]


def roc_auc(m, positives, negatives):
    """Mann-Whitney ROC AUC of map values at positive vs negative pixels.

    Equals the probability that a uniformly drawn positive outranks a
    uniformly drawn negative, ties counted one half.
    """
    pv = _coord_values(m, positives, "positive")
    nv = _coord_values(m, negatives, "negative")
    n_pos = pv.shape[0]
    n_neg = nv.shape[0]
    ranks = rankdata(np.concatenate([pv, nv]))
    r_pos = ranks[:n_pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def shuffled_auc(m, fixations_this_image, fixations_other_images,
                 n_splits=DEFAULT_SAUC_SPLITS, seed=0):
    """ROC AUC with negatives resampled from other images' fixation pixels.

    Each split draws, without replacement, as many negatives as there are
    positives (or the whole pool when it is smaller); the AUCs of the splits
    are averaged. Deterministic given the seed.
    """
    pos = np.asarray(fixations_this_image).reshape(-1, 2)
    pool = np.asarray(fixations_other_images).reshape(-1, 2)
    if pos.shape[0] == 0 or pool.shape[0] == 0:
        raise ValueError("empty fixation pool")
    rng = np.random.default_rng(seed)
    size = min(pos.shape[0], pool.shape[0])
    total = 0.0
    for _ in range(n_splits):
        idx = rng.choice(pool.shape[0], size=size, replace=False)
        total += roc_auc(m, pos, pool[idx])
    return total / n_splits


def iou(a, b):
    """Intersection over union of two masks; 0 when both are empty."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError("mask dimensions differ")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def fixation_pixels(fixation_sets, w, h):
    pts = set()
    for fs in fixation_sets:
        for f in fs.fixations:
            px = min(max(int(round(f.x)), 0), w - 1)
            py = min(max(int(round(f.y)), 0), h - 1)
            pts.add((px, py))
    return pts


def consistency_fixation(per_image_sets, sizes, seed=0, sigma_frac=0.05,
                         neg_ratio=DEFAULT_NEG_RATIO):
    """Inter-subject fixation consistency: half the subjects predict the rest.

    For each image the subjects are split 50/50; the test half is rendered
    into a fixation map (sigma = sigma_frac * width) and scored by ROC AUC
    against the held-out half's fixation pixels, with negatives drawn
    uniformly from non-fixated pixels at neg_ratio per positive. The per-image
    AUCs are averaged.
    """
    if len(per_image_sets) == 0:
        raise ValueError("no images")
    rng = np.random.default_rng(seed)
    aucs = []
    for subject_sets, (w, h) in zip(per_image_sets, sizes):
        n = len(subject_sets)
        if n < 2:
            raise ValueError("need at least 2 subjects per image")
        perm = rng.permutation(n)
        test = [subject_sets[i] for i in perm[:n // 2]]
        gt = [subject_sets[i] for i in perm[n // 2:]]
        m = render_fixation_map(test, w, h, sigma_frac)
        pos = fixation_pixels(gt, w, h)
        if not pos:
            continue
        fixated = pos | fixation_pixels(test, w, h)
        grid = [(x, y) for y in range(h) for x in range(w)
                if (x, y) not in fixated]
        size = min(neg_ratio * len(pos), len(grid))
        idx = rng.choice(len(grid), size=size, replace=False)
        neg = [grid[i] for i in idx]
        aucs.append(roc_auc(m, sorted(pos), neg))
    if not aucs:
        raise ValueError("no image had fixations in the held-out half")
    return float(np.mean(aucs))


def consistency_segmentation(per_image_subject_masks, seed=0, beta_sq=BETA_SQ):
    """Inter-subject segmentation consistency: half the subjects predict the rest.

    Per image the subjects split 50/50; each half's masks are averaged and
    thresholded at 0.5, and the test halves (as 0/1 maps) are scored against
    the held-out halves with the pooled dataset F-measure.
    """
    if len(per_image_subject_masks) == 0:
        raise ValueError("no images")
    rng = np.random.default_rng(seed)
    test_maps = []
    gt_masks = []
    for masks in per_image_subject_masks:
        n = len(masks)
        if n < 2:
            raise ValueError("need at least 2 subjects per image")
        perm = rng.permutation(n)
        test = np.mean([np.asarray(masks[i], dtype=np.float64)
                        for i in perm[:n // 2]], axis=0)
        gt = np.mean([np.asarray(masks[i], dtype=np.float64)
                      for i in perm[n // 2:]], axis=0)
        test_maps.append(threshold(test, 0.5).astype(np.float64))
        gt_masks.append(threshold(gt, 0.5))
    return dataset_f(test_maps, gt_masks, beta_sq)


def write_scores_csv(path, rows):
    """Write benchmark rows as CSV: metric,dataset,algorithm,value,n_images."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["metric", "dataset", "algorithm", "value", "n_images"])
        for metric, dataset, algorithm, value, n_images in rows:
            writer.writerow([metric, dataset, algorithm, "%.6f" % value,
                             n_images])


def write_pr_csv(path, curve):
    """Write a PR curve as CSV: threshold,precision,recall."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["threshold", "precision", "recall"])
        for t, p, r in zip(curve.thresholds, curve.precision, curve.recall):
            writer.writerow(["%.8f" % t, "%.8f" % p, "%.8f" % r])
