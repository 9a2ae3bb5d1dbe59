"""Gaze-log processing: fixation detection, fixation maps, center bias.

Raw gaze recordings are arrays of rows (t_ms, x, y, valid). Fixation events
carry a centroid position, onset time, and duration. Speeds are measured in
pixels per 100 ms between consecutive valid samples.
"""

import collections
import csv
import dataclasses
import math

import numpy as np

from .raster import gaussian_blur

MIN_DURATION_MS = 160.0
MAX_SPEED_PX_PER_100MS = 50.0
MAP_SIGMA_FRAC = 0.05
CENTER_BIAS_SIGMA_FRAC = 0.4

Fixation = collections.namedtuple("Fixation", ["x", "y", "onset", "duration"])


@dataclasses.dataclass
class FixationSet:
    """All fixations of one subject on one image."""
    image_id: str
    subject_id: str
    fixations: list


def detect_fixations(samples, min_duration=MIN_DURATION_MS,
                     max_speed=MAX_SPEED_PX_PER_100MS):
    """Group slow consecutive gaze samples into fixation events.

    Consecutive valid samples whose speed stays below max_speed form a group;
    an invalid sample (blink or track loss) ends the current group, as does a
    fast movement. Groups spanning at least min_duration become fixations at
    the centroid of their samples, with duration equal to the group's time span.
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != 4 or s.shape[0] == 0:
        raise ValueError("expected a nonempty (n, 4) array of gaze samples")
    t = s[:, 0]
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")

    fixations = []

    def flush(group):
        if len(group) < 2:
            return
        span = t[group[-1]] - t[group[0]]
        if span < min_duration:
            return
        gx = float(np.mean(s[group, 1]))
        gy = float(np.mean(s[group, 2]))
        fixations.append(Fixation(gx, gy, float(t[group[0]]), float(span)))

    group = []
    prev = None
    for i in range(s.shape[0]):
        if s[i, 3] == 0:
            flush(group)
            group = []
            prev = None
            continue
        if prev is None:
            group = [i]
        else:
            dist = math.hypot(s[i, 1] - s[prev, 1], s[i, 2] - s[prev, 2])
            speed = dist / (t[i] - t[prev]) * 100.0
            if speed < max_speed:
                group.append(i)
            else:
                flush(group)
                group = [i]
        prev = i
    flush(group)
    return fixations


def accumulate_energy(fixation_sets, w, h):
    """Per-pixel fixation counts over a list of FixationSet.

    Fixation coordinates are rounded to the nearest pixel and clamped to the
    image bounds. This unblurred count map is the fixation energy used for
    segment features.
    """
    m = np.zeros((h, w), dtype=np.float64)
    for fs in fixation_sets:
        for f in fs.fixations:
            px = min(max(int(round(f.x)), 0), w - 1)
            py = min(max(int(round(f.y)), 0), h - 1)
            m[py, px] += 1.0
    return m


def render_fixation_map(fixation_sets, w, h, sigma_frac=MAP_SIGMA_FRAC):
    """Accumulate fixation counts, blur with sigma = sigma_frac * w, peak-normalize.

    All-zero accumulations come back as all-zero maps; otherwise the returned
    map has maximum exactly 1.
    """
    if sigma_frac <= 0:
        raise ValueError("sigma_frac must be positive")
    counts = accumulate_energy(fixation_sets, w, h)
    peak = counts.max()
    if peak == 0:
        return counts
    m = gaussian_blur(counts, sigma_frac * w)
    return m / m.max()


def center_gaussian(w, h, sigma_frac=CENTER_BIAS_SIGMA_FRAC):
    """Centered 2-D Gaussian with sigma = sigma_frac * w, peak-normalized to 1."""
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    s = sigma_frac * w
    xx = np.arange(w, dtype=np.float64) - cx
    yy = np.arange(h, dtype=np.float64) - cy
    g = np.exp(-0.5 * (yy[:, None] ** 2 + xx[None, :] ** 2) / (s * s))
    return g / g.max()


def add_center_bias(m, sigma_frac=CENTER_BIAS_SIGMA_FRAC):
    """Average a [0, 1] map with the centered Gaussian prior, renormalized to [0, 1]."""
    m = np.asarray(m, dtype=np.float64)
    h, w = m.shape
    g = center_gaussian(w, h, sigma_frac)
    out = (m + g) / 2.0
    return out / out.max()


def read_gaze_csv(path):
    """Read a gaze log CSV with header t_ms,x,y,valid into an (n, 4) array."""
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["t_ms", "x", "y", "valid"]:
            raise ValueError("%s: expected header t_ms,x,y,valid" % path)
        rows = [[float(v) for v in row] for row in reader if row]
    return np.array(rows, dtype=np.float64).reshape(-1, 4)


def write_gaze_csv(path, samples):
    """Write an (n, 4) sample array as a gaze log CSV."""
    s = np.asarray(samples, dtype=np.float64)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["t_ms", "x", "y", "valid"])
        for row in s:
            writer.writerow(["%g" % row[0], "%g" % row[1], "%g" % row[2],
                             "%d" % int(row[3])])


def read_fixations_csv(path):
    """Read a fixation CSV with header x,y,onset_ms,duration_ms."""
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["x", "y", "onset_ms", "duration_ms"]:
            raise ValueError("%s: expected header x,y,onset_ms,duration_ms" % path)
        return [Fixation(float(r[0]), float(r[1]), float(r[2]), float(r[3]))
                for r in reader if r]


def write_fixations_csv(path, fixations):
    """Write fixation events as a CSV with header x,y,onset_ms,duration_ms."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "y", "onset_ms", "duration_ms"])
        for fx in fixations:
            writer.writerow(["%g" % fx.x, "%g" % fx.y, "%g" % fx.onset,
                             "%g" % fx.duration])
