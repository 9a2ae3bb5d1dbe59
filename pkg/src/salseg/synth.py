"""Synthetic dataset generator: a desk-scale substrate with known ground truth.

Each image is a noisy flat background with 1 to 3 high-contrast objects
(rectangles and ellipses). Simulated click subjects prefer large,
high-contrast objects, so exactly which objects count as salient is known;
simulated gaze subjects fixate mostly on the objects, weighted the same way.
Proposal pools contain the ground-truth masks, built-in proposals, and random
distractors, in shuffled rank order. Everything is deterministic for a fixed
seed: identical seeds produce byte-identical directory trees.
"""

import os

import numpy as np

from .fixproc import center_gaussian, write_gaze_csv
from .pipeline import load_dataset
from .proposals import builtin_proposals
from .raster import write_map, write_mask, write_ppm

N_CLICK_SUBJECTS = 12
N_GAZE_SUBJECTS = 8
N_DISTRACTORS = 20
BUILTIN_COUNT = 30
SAMPLE_STEP_MS = 8.0  # 125 Hz
OBJECT_FIX_PROB = 0.8
MIN_TARGET_GAP = 12.0
MAX_COLOR_DIST = 441.67295593  # sqrt(3) * 255


def _shape_mask(w, h, x0, y0, ow, oh, kind):
    mask = np.zeros((h, w), dtype=bool)
    if kind == 0:
        mask[y0:y0 + oh, x0:x0 + ow] = True
    else:
        cy = y0 + (oh - 1) / 2.0
        cx = x0 + (ow - 1) / 2.0
        yy, xx = np.mgrid[0:h, 0:w]
        mask = ((xx - cx) / (ow / 2.0)) ** 2 + ((yy - cy) / (oh / 2.0)) ** 2 <= 1.0
    return mask


def _random_mask(rng, w, h):
    ow = max(4, int(rng.uniform(0.08, 0.35) * w))
    oh = max(4, int(rng.uniform(0.08, 0.35) * h))
    x0 = int(rng.integers(1, max(2, w - ow - 1)))
    y0 = int(rng.integers(1, max(2, h - oh - 1)))
    return _shape_mask(w, h, x0, y0, ow, oh, int(rng.integers(2)))


def _make_objects(rng, w, h):
    """Disjoint object masks with colors far from the background color."""
    base = rng.integers(40, 216, size=3).astype(np.float64)
    n_obj = int(rng.integers(1, 4))
    masks = []
    boxes = []
    occupied = np.zeros((h, w), dtype=bool)
    for _ in range(n_obj):
        for _ in range(40):
            ow = int(rng.uniform(0.18, 0.38) * w)
            oh = int(rng.uniform(0.18, 0.38) * h)
            x0 = int(rng.integers(2, w - ow - 2))
            y0 = int(rng.integers(2, h - oh - 2))
            mask = _shape_mask(w, h, x0, y0, ow, oh, int(rng.integers(2)))
            if not (mask & occupied).any():
                masks.append(mask)
                boxes.append((x0, y0, ow, oh))
                occupied |= mask
                break
    colors = []
    for _ in masks:
        while True:
            c = rng.integers(0, 256, size=3).astype(np.float64)
            if np.linalg.norm(c - base) < 130:
                continue
            if any(np.linalg.norm(c - prev) < 60 for prev in colors):
                continue
            colors.append(c)
            break
    return base, masks, boxes, colors


def _paint_image(rng, w, h, base, masks, colors):
    img = np.tile(base, (h, w, 1))
    for mask, color in zip(masks, colors):
        img[mask] = color
    img = img + rng.normal(0.0, 5.0, size=(h, w, 3))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _click_table(rng, weights):
    """Per-subject 0/1 clicks; the heaviest object always reaches a majority."""
    n_obj = len(weights)
    top = int(np.argmax(weights))
    clicked = np.zeros((N_CLICK_SUBJECTS, n_obj), dtype=np.int64)
    for j in range(n_obj):
        p = 0.92 if j == top else 0.12 * weights[j] / weights[top]
        clicked[:, j] = rng.random(N_CLICK_SUBJECTS) < p
    need = 7 - clicked[:, top].sum()
    if need > 0:
        zeros = np.nonzero(clicked[:, top] == 0)[0]
        clicked[zeros[:need], top] = 1
    return clicked


def _gaze_targets(rng, w, h, boxes, weights):
    n_fix = int(rng.integers(7, 11))
    probs = np.asarray(weights, dtype=np.float64) ** 2
    probs /= probs.sum()
    targets = []
    prev = None
    for _ in range(n_fix):
        for _ in range(20):
            if rng.random() < OBJECT_FIX_PROB:
                j = int(rng.choice(len(boxes), p=probs))
                x0, y0, ow, oh = boxes[j]
                tx = x0 + (ow - 1) / 2.0 + rng.uniform(-0.22, 0.22) * ow
                ty = y0 + (oh - 1) / 2.0 + rng.uniform(-0.22, 0.22) * oh
            else:
                tx = rng.uniform(3, w - 4)
                ty = rng.uniform(3, h - 4)
            if prev is None or np.hypot(tx - prev[0], ty - prev[1]) >= MIN_TARGET_GAP:
                break
        targets.append((tx, ty))
        prev = (tx, ty)
    return targets


def _gaze_samples(rng, w, h, targets):
    """125 Hz samples dwelling 200-336 ms per target.

    Within-dwell jitter stays under 1.25 px per axis so consecutive speeds
    stay below the saccade threshold, and targets are far enough apart that
    each jump exceeds it.
    """
    rows = []
    t = 0.0
    for i, (tx, ty) in enumerate(targets):
        if i > 0 and rng.random() < 0.3:
            # blink sample during the saccade
            rows.append((t, (tx + targets[i - 1][0]) / 2.0,
                         (ty + targets[i - 1][1]) / 2.0, 0))
            t += SAMPLE_STEP_MS
        duration = rng.uniform(200.0, 336.0)
        n_s = int(duration // SAMPLE_STEP_MS)
        jitter = rng.uniform(-1.25, 1.25, size=(n_s, 2))
        for k in range(n_s):
            x = min(max(tx + jitter[k, 0], 0.0), w - 1.0)
            y = min(max(ty + jitter[k, 1], 0.0), h - 1.0)
            rows.append((t, x, y, 1))
            t += SAMPLE_STEP_MS
    return np.array(rows, dtype=np.float64)


def synth_dataset(n_images, w, h, seed, root):
    """Generate a synthetic dataset under root and return its DatasetIndex."""
    if n_images < 10:
        raise ValueError("need at least 10 images")
    if w < 32 or h < 24:
        raise ValueError("degenerate image dimensions")
    os.makedirs(os.path.join(root, "images"), exist_ok=True)
    os.makedirs(os.path.join(root, "maps", "center"), exist_ok=True)

    click_rows = []
    for i in range(n_images):
        rng = np.random.default_rng([seed, i])
        image_id = "img%04d" % (i + 1)

        base, masks, boxes, colors = _make_objects(rng, w, h)
        img = _paint_image(rng, w, h, base, masks, colors)
        write_ppm(os.path.join(root, "images", image_id + ".ppm"), img)

        obj_dir = os.path.join(root, "objects", image_id)
        os.makedirs(obj_dir, exist_ok=True)
        for j, mask in enumerate(masks):
            write_mask(os.path.join(obj_dir, "%02d.pgm" % (j + 1)), mask)

        contrasts = [np.linalg.norm(c - base) / MAX_COLOR_DIST for c in colors]
        weights = [mask.mean() * contrast
                   for mask, contrast in zip(masks, contrasts)]

        clicked = _click_table(rng, weights)
        for s in range(N_CLICK_SUBJECTS):
            for j in range(len(masks)):
                click_rows.append((image_id, "%02d" % (j + 1),
                                   "c%02d" % (s + 1), clicked[s, j]))

        for s in range(N_GAZE_SUBJECTS):
            subject = "s%02d" % (s + 1)
            targets = _gaze_targets(rng, w, h, boxes, weights)
            samples = _gaze_samples(rng, w, h, targets)
            subj_dir = os.path.join(root, "fixations", subject)
            os.makedirs(subj_dir, exist_ok=True)
            write_gaze_csv(os.path.join(subj_dir, image_id + ".csv"), samples)

        pool_masks = list(masks)
        builtin = builtin_proposals(img, BUILTIN_COUNT,
                                    seed=int(rng.integers(2 ** 31)))
        pool_masks.extend(c.mask for c in builtin.candidates)
        for _ in range(N_DISTRACTORS):
            pool_masks.append(_random_mask(rng, w, h))
        order = rng.permutation(len(pool_masks))
        seg_dir = os.path.join(root, "segments", image_id)
        os.makedirs(seg_dir, exist_ok=True)
        for rank, idx in enumerate(order):
            write_mask(os.path.join(seg_dir, "%03d.pgm" % (rank + 1)),
                       pool_masks[idx])

        write_map(os.path.join(root, "maps", "center", image_id + ".pgm"),
                  center_gaussian(w, h))

    with open(os.path.join(root, "clicks.csv"), "w", newline="") as f:
        f.write("image,object,subject,clicked\n")
        for image_id, obj, subject, clicked in click_rows:
            f.write("%s,%s,%s,%d\n" % (image_id, obj, subject, clicked))

    return load_dataset(root)
