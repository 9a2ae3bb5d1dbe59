"""Pixel-level primitives: image and mask IO, blur, thresholds, histograms, components.

Conventions used across the package: images are uint8 arrays of shape (h, w, 3),
gray maps are float64 arrays of shape (h, w) with values in [0, 1], masks are
bool arrays of shape (h, w). Pixel coordinates are (x, y) = (column, row).
"""

import dataclasses

import numpy as np
from scipy import ndimage


class ImageFormatError(Exception):
    """Raised when an image file cannot be decoded."""


_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _parse_pnm_header(data, magic, path):
    if data[:2] != magic:
        raise ImageFormatError("%s: malformed header (expected %s)"
                               % (path, magic.decode()))
    pos = 2
    n = len(data)
    fields = []
    while len(fields) < 3:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("%s: malformed header (truncated)" % path)
        fields.append(data[start:pos])
    if pos >= n:
        raise ImageFormatError("%s: malformed header (no pixel data)" % path)
    pos += 1  # single whitespace byte separates header from pixel data
    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError:
        raise ImageFormatError("%s: malformed header (non-numeric field)" % path)
    if w < 1 or h < 1:
        raise ImageFormatError("%s: malformed header (bad dimensions)" % path)
    if maxval != 255:
        raise ImageFormatError("%s: unsupported maxval %d" % (path, maxval))
    return w, h, pos


def read_ppm(path):
    """Read a binary PPM (P6) file into a uint8 (h, w, 3) array."""
    with open(path, "rb") as f:
        data = f.read()
    w, h, pos = _parse_pnm_header(data, b"P6", path)
    need = 3 * w * h
    raw = data[pos:pos + need]
    if len(raw) < need:
        raise ImageFormatError("%s: truncated pixel data" % path)
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3).copy()


def write_ppm(path, img):
    """Write a uint8 (h, w, 3) array as a binary PPM (P6) file."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) array")
    h, w = img.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(img.tobytes())


def read_pgm(path):
    """Read a binary PGM (P5) file into a uint8 (h, w) array."""
    with open(path, "rb") as f:
        data = f.read()
    w, h, pos = _parse_pnm_header(data, b"P5", path)
    need = w * h
    raw = data[pos:pos + need]
    if len(raw) < need:
        raise ImageFormatError("%s: truncated pixel data" % path)
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(path, arr):
    """Write a uint8 (h, w) array as a binary PGM (P5) file."""
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError("expected an (h, w) array")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(arr.tobytes())


def _read_png(path):
    try:
        from PIL import Image
    except ImportError:  # pragma: no cover
        raise ImageFormatError("%s: PNG support requires Pillow" % path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.asarray(im)
    except ImageFormatError:
        raise
    except Exception as e:
        raise ImageFormatError("%s: %s" % (path, e))
    if mode == "RGB":
        return arr.astype(np.uint8)
    if mode == "L":
        return np.repeat(arr.astype(np.uint8)[:, :, None], 3, axis=2)
    if mode in ("I", "I;16", "I;16B"):
        # 16-bit grayscale: keep the high byte
        high = (arr.astype(np.uint32) >> 8).astype(np.uint8)
        return np.repeat(high[:, :, None], 3, axis=2)
    raise ImageFormatError("%s: unsupported color type %r" % (path, mode))


def load_image(path):
    """Decode a PPM (P6) or PNG file into a uint8 (h, w, 3) array.

    16-bit PNG channels are right-shifted to 8 bits; grayscale PNGs are
    replicated across the three channels.
    """
    with open(path, "rb") as f:
        head = f.read(8)
    if head[:2] == b"P6":
        return read_ppm(path)
    if head == b"\x89PNG\r\n\x1a\n":
        return _read_png(path)
    raise ImageFormatError("%s: malformed header (not PPM or PNG)" % path)


def read_mask(path):
    """Read a PGM mask; values >= 128 count as foreground."""
    return read_pgm(path) >= 128


def write_mask(path, mask):
    """Write a bool mask as a PGM with 0=background, 255=foreground."""
    mask = np.asarray(mask, dtype=bool)
    write_pgm(path, np.where(mask, 255, 0).astype(np.uint8))


def read_map(path):
    """Read a PGM file as a [0, 1] gray map."""
    return read_pgm(path).astype(np.float64) / 255.0


def write_map(path, m):
    """Write a [0, 1] gray map as a PGM, scaled by 255 and rounded."""
    m = np.asarray(m, dtype=np.float64)
    write_pgm(path, np.rint(np.clip(m, 0.0, 1.0) * 255.0).astype(np.uint8))


def gaussian_blur(m, sigma):
    """Separable Gaussian blur with border renormalization.

    The kernel is truncated at radius ceil(3*sigma) and normalized to sum 1;
    near borders the effective kernel is renormalized over in-bounds taps, so
    constant maps stay constant.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    m = np.asarray(m, dtype=np.float64)
    r = int(np.ceil(3.0 * sigma))
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    k /= k.sum()
    num = ndimage.correlate1d(m, k, axis=0, mode="constant", cval=0.0)
    num = ndimage.correlate1d(num, k, axis=1, mode="constant", cval=0.0)
    den = ndimage.correlate1d(np.ones_like(m), k, axis=0, mode="constant", cval=0.0)
    den = ndimage.correlate1d(den, k, axis=1, mode="constant", cval=0.0)
    return num / den


def threshold(m, th):
    """Binarize a map: mask[p] = (map[p] >= th)."""
    return np.asarray(m, dtype=np.float64) >= th


@dataclasses.dataclass
class RgbHistogram:
    """RGB color histogram with bins**3 cells and the contributing pixel count."""
    bins: int
    counts: np.ndarray
    total: int


def rgb_histogram(img, mask, bins=8):
    """Histogram the masked pixels of an RGB image into bins**3 cells.

    A pixel (r, g, b) lands in cell (r*bins//256, g*bins//256, b*bins//256),
    flattened in that order.
    """
    if not 2 <= bins <= 32:
        raise ValueError("bins must be in [2, 32]")
    img = np.asarray(img)
    mask = np.asarray(mask, dtype=bool)
    if img.shape[:2] != mask.shape:
        raise ValueError("image and mask dimensions differ")
    px = img[mask].astype(np.int64)
    idx = ((px[:, 0] * bins // 256) * bins + px[:, 1] * bins // 256) * bins \
        + px[:, 2] * bins // 256
    counts = np.bincount(idx, minlength=bins ** 3).astype(np.float64)
    return RgbHistogram(bins, counts, int(px.shape[0]))


def chi_square(h1, h2):
    """Chi-square distance between two frequency-normalized histograms, in [0, 1]."""
    if h1.bins != h2.bins:
        raise ValueError("histogram bin counts differ")
    if h1.total == 0 or h2.total == 0:
        raise ValueError("empty histogram")
    p = h1.counts / h1.total
    q = h2.counts / h2.total
    s = p + q
    nz = s > 0
    d = p[nz] - q[nz]
    return float(0.5 * np.sum(d * d / s[nz]))


def connected_components(mask, connectivity=4):
    """Label connected regions of a mask 1..n in raster-scan first-encounter order.

    Returns (labels, n) where labels is an int array with 0 for background.
    """
    mask = np.asarray(mask, dtype=bool)
    if connectivity == 4:
        structure = _CROSS
    elif connectivity == 8:
        structure = np.ones((3, 3), dtype=bool)
    else:
        raise ValueError("connectivity must be 4 or 8")
    labels, n = ndimage.label(mask, structure=structure)
    if n > 1:
        flat = labels.ravel()
        nz = np.flatnonzero(flat)
        seen, first = np.unique(flat[nz], return_index=True)
        order = np.argsort(np.argsort(nz[first]))
        remap = np.zeros(n + 1, dtype=labels.dtype)
        remap[seen] = order + 1
        labels = remap[labels]
    return labels, int(n)


def inner_boundary(mask):
    """Mask of true pixels 4-adjacent to an in-bounds false pixel."""
    mask = np.asarray(mask, dtype=bool)
    eroded = ndimage.binary_erosion(mask, structure=_CROSS, border_value=1)
    return mask & ~eroded
