"""Dataset design-bias statistics: color contrast, boundary strength, object size.

Each labeled object yields four numbers in [0, 1]: local color contrast across
its boundary, global color contrast against the rest of the image, mean edge
strength along its boundary, and its size as a fraction of the image.
"""

import csv
import dataclasses

import numpy as np
from scipy import ndimage

from .raster import chi_square, inner_boundary, rgb_histogram

DEFAULT_BINS = 8
LOCAL_PATCH = 5
BOUNDARY_PATCH = 3
HIST_BINS = 20


@dataclasses.dataclass
class ObjectStats:
    """Bias statistics for one labeled object."""
    image_id: str
    object_id: str
    local_contrast: float
    global_contrast: float
    boundary_strength: float
    size_fraction: float


def local_color_contrast(img, mask, patch=LOCAL_PATCH, bins=DEFAULT_BINS):
    """Mean chi-square distance between foreground and background colors in
    patch-sized windows centered on each boundary pixel of the mask.

    Windows are clipped at the image borders; windows whose foreground or
    background side is empty are skipped.
    """
    img = np.asarray(img)
    mask = np.asarray(mask, dtype=bool)
    if img.shape[:2] != mask.shape:
        raise ValueError("image and mask dimensions differ")
    if not mask.any():
        raise ValueError("empty mask")
    boundary = inner_boundary(mask)
    ys, xs = np.nonzero(boundary)
    if ys.size == 0:
        raise ValueError("mask has no boundary (no background anywhere)")
    h, w = mask.shape
    r = patch // 2
    vals = []
    for y, x in zip(ys, xs):
        y0, y1 = max(0, y - r), min(h, y + r + 1)
        x0, x1 = max(0, x - r), min(w, x + r + 1)
        win_img = img[y0:y1, x0:x1]
        win_mask = mask[y0:y1, x0:x1]
        n_fg = int(win_mask.sum())
        if n_fg == 0 or n_fg == win_mask.size:
            continue
        vals.append(chi_square(rgb_histogram(win_img, win_mask, bins),
                               rgb_histogram(win_img, ~win_mask, bins)))
    if not vals:
        return 0.0
    return float(np.mean(vals))


def global_color_contrast(img, mask, bins=DEFAULT_BINS):
    """Chi-square distance between the object's and the background's RGB histograms."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any() or mask.all():
        raise ValueError("degenerate mask (empty foreground or background)")
    return chi_square(rgb_histogram(img, mask, bins),
                      rgb_histogram(img, ~mask, bins))


def boundary_strength(edge_map, mask, patch=BOUNDARY_PATCH):
    """Mean edge response in patch-sized windows centered on boundary pixels."""
    edge_map = np.asarray(edge_map, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if edge_map.shape != mask.shape:
        raise ValueError("edge map and mask dimensions differ")
    boundary = inner_boundary(mask)
    ys, xs = np.nonzero(boundary)
    if ys.size == 0:
        raise ValueError("mask has no boundary")
    h, w = mask.shape
    r = patch // 2
    vals = []
    for y, x in zip(ys, xs):
        win = edge_map[max(0, y - r):min(h, y + r + 1),
                       max(0, x - r):min(w, x + r + 1)]
        vals.append(win.mean())
    return float(np.mean(vals))


def default_edge_map(img):
    """Normalized Sobel gradient magnitude, max over color channels.

    A stand-in edge detector so boundary statistics are computable without an
    external edge map; any detector's output can be substituted.
    """
    img = np.asarray(img, dtype=np.float64)
    resp = np.zeros(img.shape[:2], dtype=np.float64)
    for c in range(img.shape[2]):
        gx = ndimage.sobel(img[:, :, c], axis=1)
        gy = ndimage.sobel(img[:, :, c], axis=0)
        resp = np.maximum(resp, np.hypot(gx, gy))
    peak = resp.max()
    if peak == 0:
        return resp
    return resp / peak


def object_size(mask):
    """Object pixels as a fraction of the image."""
    mask = np.asarray(mask, dtype=bool)
    return float(mask.mean())


def compute_object_stats(img, mask, image_id="", object_id="", edge_map=None,
                         bins=DEFAULT_BINS):
    """All four statistics for one object; the edge map defaults to Sobel."""
    if edge_map is None:
        edge_map = default_edge_map(img)
    return ObjectStats(
        image_id=image_id,
        object_id=object_id,
        local_contrast=local_color_contrast(img, mask, bins=bins),
        global_contrast=global_color_contrast(img, mask, bins=bins),
        boundary_strength=boundary_strength(edge_map, mask),
        size_fraction=object_size(mask),
    )


def write_stats_csv(path, rows):
    """Write ObjectStats rows to CSV, one line per object."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["image_id", "object_id", "local_contrast",
                         "global_contrast", "boundary_strength",
                         "size_fraction"])
        for s in rows:
            writer.writerow([s.image_id, s.object_id,
                             "%.6f" % s.local_contrast,
                             "%.6f" % s.global_contrast,
                             "%.6f" % s.boundary_strength,
                             "%.6f" % s.size_fraction])


def write_stats_hist_csv(path, rows, n_bins=HIST_BINS):
    """Write 20-bin dataset histograms of each statistic over [0, 1]."""
    fields = ["local_contrast", "global_contrast", "boundary_strength",
              "size_fraction"]
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["statistic", "bin_low", "bin_high", "count"])
        for field in fields:
            vals = np.array([getattr(s, field) for s in rows])
            counts, _ = np.histogram(np.clip(vals, 0.0, 1.0), bins=edges)
            for i in range(n_bins):
                writer.writerow([field, "%.3f" % edges[i],
                                 "%.3f" % edges[i + 1], int(counts[i])])
