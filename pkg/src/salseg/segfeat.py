"""Segment features: 15 shape values plus 18 fixation-distribution values.

All length and area features are normalized by the image dimensions (or the
image diagonal) so vectors are comparable across image sizes. Fixation energy
maps are used raw: integer count maps for human fixations, [0, 1] values for
algorithm maps.
"""

import csv
import dataclasses
import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .raster import connected_components, inner_boundary

HIST_MAJOR_BINS = 4
HIST_MINOR_BINS = 3

SHAPE_FEATURE_NAMES = [
    "area", "centroid_x", "centroid_y", "convex_area", "euler_number",
    "perimeter", "major_axis_length", "minor_axis_length", "eccentricity",
    "orientation", "equivalent_diameter", "solidity", "extent",
    "width", "height",
]
FIXATION_FEATURE_NAMES = [
    "min_energy", "max_energy", "mean_energy",
    "weighted_centroid_x", "weighted_centroid_y", "energy_ratio",
] + ["hist_%d" % i for i in range(HIST_MAJOR_BINS * HIST_MINOR_BINS)]
FEATURE_NAMES = SHAPE_FEATURE_NAMES + FIXATION_FEATURE_NAMES
N_FEATURES = len(FEATURE_NAMES)


@dataclasses.dataclass
class RegionMoments:
    """Pixel count, centroid, and central second moments of a mask."""
    m00: float
    cx: float
    cy: float
    mu20: float
    mu02: float
    mu11: float


def region_moments(mask):
    """Moments of a mask's pixel coordinates, (x, y) = (column, row)."""
    ys, xs = np.nonzero(np.asarray(mask, dtype=bool))
    n = ys.size
    if n == 0:
        raise ValueError("empty mask")
    cx = xs.mean()
    cy = ys.mean()
    dx = xs - cx
    dy = ys - cy
    return RegionMoments(float(n), float(cx), float(cy),
                         float(np.mean(dx * dx)), float(np.mean(dy * dy)),
                         float(np.mean(dx * dy)))


def _ellipse_params(mom):
    """Axis lengths, eccentricity, and orientation of the moment-equivalent ellipse.

    The 1/12 term accounts for each pixel being a unit square, matching the
    usual region-properties convention; orientation is the major-axis angle in
    image coordinates, in (-pi/2, pi/2].
    """
    uxx = mom.mu20 + 1.0 / 12.0
    uyy = mom.mu02 + 1.0 / 12.0
    uxy = mom.mu11
    common = math.sqrt((uxx - uyy) ** 2 + 4.0 * uxy * uxy)
    major = 2.0 * math.sqrt(2.0) * math.sqrt(uxx + uyy + common)
    minor_sq = uxx + uyy - common
    minor = 2.0 * math.sqrt(2.0) * math.sqrt(max(minor_sq, 0.0))
    if major == 0:
        ecc = 0.0
    else:
        ecc = math.sqrt(max(1.0 - (minor / major) ** 2, 0.0))
    if uxy == 0 and uxx == uyy:
        orient = 0.0
    else:
        orient = 0.5 * math.atan2(2.0 * uxy, uxx - uyy)
    if orient <= -math.pi / 2:
        orient += math.pi
    return major, minor, ecc, orient


def euler_number(mask):
    """Foreground components (8-connected) minus holes (4-connected)."""
    mask = np.asarray(mask, dtype=bool)
    _, n_fg = connected_components(mask, connectivity=8)
    padded = np.pad(mask, 1, constant_values=False)
    _, n_bg = connected_components(~padded, connectivity=4)
    return n_fg - (n_bg - 1)


def convex_area_pixels(mask):
    """Pixels whose centers fall inside the convex hull of the mask's pixels.

    Degenerate masks (collinear pixel centers) rasterize to the pixels
    themselves.
    """
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    n = ys.size
    if n == 0:
        raise ValueError("empty mask")
    pts = np.column_stack([xs, ys]).astype(np.float64)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return int(n)
    x0, x1 = xs.min(), xs.max()
    y0, y1 = ys.min(), ys.max()
    gx, gy = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    grid = np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    inside = np.ones(grid.shape[0], dtype=bool)
    for a, b, c in hull.equations:
        inside &= grid[:, 0] * a + grid[:, 1] * b + c <= 1e-7
    return int(inside.sum())


def shape_features(mask):
    """The 15 shape values of a nonempty mask, in declared order."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    mom = region_moments(mask)
    n = mom.m00
    diag = math.hypot(w, h)
    image_area = float(w * h)

    hull_px = convex_area_pixels(mask)
    euler = euler_number(mask)
    perimeter_px = int(inner_boundary(mask).sum())
    major, minor, ecc, orient = _ellipse_params(mom)

    ys, xs = np.nonzero(mask)
    bx0, bx1 = xs.min(), xs.max()
    by0, by1 = ys.min(), ys.max()
    bbox_w = bx1 - bx0 + 1
    bbox_h = by1 - by0 + 1

    return np.array([
        n / image_area,
        mom.cx / w,
        mom.cy / h,
        hull_px / image_area,
        float(euler),
        perimeter_px / diag,
        major / diag,
        minor / diag,
        ecc,
        orient,
        math.sqrt(4.0 * n / math.pi) / diag,
        n / hull_px,
        n / (bbox_w * bbox_h),
        bbox_w / w,
        bbox_h / h,
    ], dtype=np.float64)


def fixation_features(mask, energy):
    """The 18 fixation-distribution values of a mask over an energy map.

    The 4x3 histogram covers the mask's pixels after rotating them about the
    centroid by minus the shape orientation, so 4 bins run along the major
    axis and 3 along the minor axis; cells are indexed row-major with the
    major-axis bin varying fastest. The histogram is normalized to sum 1
    whenever the mask contains any energy.
    """
    mask = np.asarray(mask, dtype=bool)
    energy = np.asarray(energy, dtype=np.float64)
    if mask.shape != energy.shape:
        raise ValueError("mask and energy map dimensions differ")
    h, w = mask.shape
    mom = region_moments(mask)
    _, _, _, orient = _ellipse_params(mom)

    e = energy[mask]
    ys, xs = np.nonzero(mask)
    e_sum = e.sum()
    total = energy.sum()

    if e_sum > 0:
        wcx = float((xs * e).sum() / e_sum)
        wcy = float((ys * e).sum() / e_sum)
    else:
        wcx, wcy = mom.cx, mom.cy
    ratio = float(e_sum / total) if total > 0 else 0.0

    cos_t = math.cos(-orient)
    sin_t = math.sin(-orient)
    dx = xs - mom.cx
    dy = ys - mom.cy
    u = dx * cos_t - dy * sin_t
    v = dx * sin_t + dy * cos_t

    def bin_index(coords, n_bins):
        lo = coords.min()
        span = coords.max() - lo
        if span == 0:
            return np.zeros(coords.shape[0], dtype=np.int64)
        idx = np.floor((coords - lo) / (span / n_bins)).astype(np.int64)
        return np.clip(idx, 0, n_bins - 1)

    ub = bin_index(u, HIST_MAJOR_BINS)
    vb = bin_index(v, HIST_MINOR_BINS)
    cells = np.zeros(HIST_MAJOR_BINS * HIST_MINOR_BINS, dtype=np.float64)
    np.add.at(cells, vb * HIST_MAJOR_BINS + ub, e)
    if e_sum > 0:
        cells /= cells.sum()
    else:
        cells[:] = 0.0

    head = np.array([
        float(e.min()), float(e.max()), float(e.mean()),
        wcx / w, wcy / h, ratio,
    ], dtype=np.float64)
    return np.concatenate([head, cells])


def extract(mask, energy):
    """The full 33-component feature vector: shape block then fixation block."""
    return np.concatenate([shape_features(mask), fixation_features(mask, energy)])


def write_features_csv(path, rows):
    """Write feature rows as CSV: image-id, rank, f0..f32, target-iou."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["image-id", "rank"] +
                        ["f%d" % i for i in range(N_FEATURES)] + ["target-iou"])
        for image_id, rank, vec, target in rows:
            writer.writerow([image_id, rank] +
                            ["%.8f" % v for v in vec] + ["%.8f" % target])
