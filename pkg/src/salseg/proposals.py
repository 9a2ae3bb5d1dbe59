"""Segment candidate pools: external mask stacks and a built-in generator.

External pools are directories of rank-named PGM masks, the interchange
format for proposals produced by any upstream generator. The built-in
generator keeps the pipeline runnable end to end without one: it merges the
4-connected pixel graph at three color-distance scales and ranks the
resulting regions by a size-times-boundary-contrast heuristic.
"""

import csv
import dataclasses
import os
import re

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components as graph_components

from .metrics import iou
from .raster import inner_boundary, read_mask
from .stats import default_edge_map

MERGE_SCALES = (16.0, 32.0, 64.0)
MIN_AREA_FRAC = 0.001
DEDUP_IOU = 0.95


@dataclasses.dataclass
class SegmentCandidate:
    """One candidate mask with its generator rank (1 = best)."""
    mask: np.ndarray
    external_rank: int
    source: str  # "external", "builtin", or "ground-truth"


@dataclasses.dataclass
class SegmentPool:
    """Candidates for one image, ordered by external rank 1..n."""
    image_id: str
    candidates: list


def load_pool(directory, image_id=""):
    """Load a pool from rank-named masks NNN.pgm with contiguous ranks 1..n.

    An optional scores.csv (rank,score) in the directory is ignored here;
    ranks come from the file names.
    """
    if not os.path.isdir(directory):
        raise ValueError("missing pool directory: %s" % directory)
    entries = []
    for name in os.listdir(directory):
        match = re.fullmatch(r"(\d+)\.pgm", name)
        if match:
            entries.append((int(match.group(1)), name))
    if not entries:
        raise ValueError("no NNN.pgm masks in %s" % directory)
    entries.sort()
    ranks = [rank for rank, _ in entries]
    if ranks != list(range(1, len(ranks) + 1)):
        raise ValueError("non-contiguous ranks in %s" % directory)
    candidates = []
    for rank, name in entries:
        mask = read_mask(os.path.join(directory, name))
        if not mask.any():
            raise ValueError("empty mask %s in %s" % (name, directory))
        candidates.append(SegmentCandidate(mask, rank, "external"))
    return SegmentPool(image_id, candidates)


def save_pool(directory, pool):
    """Write a pool's masks as NNN.pgm files under a directory."""
    from .raster import write_mask
    os.makedirs(directory, exist_ok=True)
    for cand in pool.candidates:
        write_mask(os.path.join(directory, "%03d.pgm" % cand.external_rank),
                   cand.mask)


def load_pool_scores(directory):
    """Read an optional scores.csv (rank,score); None when absent."""
    path = os.path.join(directory, "scores.csv")
    if not os.path.exists(path):
        return None
    scores = {}
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        next(reader, None)
        for row in reader:
            if row:
                scores[int(row[0])] = float(row[1])
    return scores


def _merge_regions(img, max_dist):
    """Connected components of the pixel graph keeping edges below max_dist."""
    h, w = img.shape[:2]
    rgb = img.astype(np.float64)
    idx = np.arange(h * w).reshape(h, w)

    def edges(a, b):
        d = np.sqrt(((rgb[a] - rgb[b]) ** 2).sum(axis=-1)).ravel()
        keep = d <= max_dist
        return idx[a].ravel()[keep], idx[b].ravel()[keep]

    right = edges((slice(None), slice(0, w - 1)), (slice(None), slice(1, w)))
    down = edges((slice(0, h - 1), slice(None)), (slice(1, h), slice(None)))
    rows = np.concatenate([right[0], down[0]])
    cols = np.concatenate([right[1], down[1]])
    graph = sparse.coo_matrix((np.ones(rows.shape[0], dtype=np.int8),
                               (rows, cols)), shape=(h * w, h * w))
    n, labels = graph_components(graph, directed=False)
    return labels.reshape(h, w), n


def builtin_proposals(img, max_count, seed=0, scales=MERGE_SCALES,
                      min_area_frac=MIN_AREA_FRAC):
    """Generate up to max_count candidate masks from color-merged regions.

    Regions are collected at each merge scale, scored by
    sqrt(area fraction) * mean boundary edge strength (plus a tiny seeded
    jitter to break ties), deduplicated at IoU > 0.95, and ranked by score.
    Deterministic for a fixed (image, max_count, seed).
    """
    if max_count < 1:
        raise ValueError("max_count must be >= 1")
    img = np.asarray(img)
    h, w = img.shape[:2]
    min_area = max(1, int(min_area_frac * w * h))
    edge_map = default_edge_map(img)
    rng = np.random.default_rng(seed)

    scored = []
    for scale in scales:
        labels, n = _merge_regions(img, scale)
        areas = np.bincount(labels.ravel(), minlength=n)
        for region in range(n):
            if areas[region] < min_area:
                continue
            mask = labels == region
            boundary = inner_boundary(mask)
            if boundary.any():
                strength = float(edge_map[boundary].mean())
            else:
                strength = 0.0
            score = np.sqrt(areas[region] / (w * h)) * strength
            score += rng.uniform(0.0, 1e-6)
            scored.append((score, mask))

    scored.sort(key=lambda item: -item[0])
    kept = []
    for score, mask in scored:
        if len(kept) == max_count:
            break
        if any(iou(mask, k) > DEDUP_IOU for k in kept):
            continue
        kept.append(mask)
    candidates = [SegmentCandidate(mask, rank + 1, "builtin")
                  for rank, mask in enumerate(kept)]
    return SegmentPool("", candidates)


def best_overlap_selection(pool, gts, first_n):
    """Per ground-truth mask, the best-IoU candidate among ranks <= first_n.

    Ties break toward the lower rank. Returns one candidate per ground-truth
    mask.
    """
    if not pool.candidates:
        raise ValueError("empty pool")
    in_range = [c for c in pool.candidates if c.external_rank <= first_n]
    if not in_range:
        in_range = pool.candidates[:1]
    picks = []
    for gt in gts:
        best = None
        best_iou = -1.0
        for cand in in_range:
            score = iou(cand.mask, gt)
            if score > best_iou:
                best_iou = score
                best = cand
        picks.append(best)
    return picks
