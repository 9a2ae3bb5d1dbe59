"""Random regression forest predicting a segment's overlap with the ground truth.

Trees are grown on bootstrap samples with a fresh RNG stream per tree, so
training is deterministic for a given seed no matter how trees are scheduled.
Splits minimize the summed squared error of the two children; ties go to the
lower feature index, then the lower threshold. Rows go left when the feature
value is <= the threshold.
"""

import dataclasses
import math
import struct

import numpy as np

N_TREES = 30
MIN_LEAF = 5

_MAGIC = b"SFOR"
_VERSION = 1


class ForestFormatError(Exception):
    """Raised when a model file cannot be read."""


@dataclasses.dataclass
class ForestParams:
    """Hyperparameters; mtry=None means ceil(n_features / 3)."""
    n_trees: int = N_TREES
    mtry: int = None
    min_leaf: int = MIN_LEAF
    max_depth: int = None
    bootstrap: bool = True


@dataclasses.dataclass
class Tree:
    """Flat pre-order node arrays; feature = -1 marks a leaf."""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray


@dataclasses.dataclass
class Forest:
    trees: list
    n_features: int
    params: ForestParams
    seed: int


def _best_split(X, y, sample_idx, feats):
    """Lowest-SSE (feature, threshold) over candidate midpoints, or None."""
    best_sse = math.inf
    best = None
    m = sample_idx.shape[0]
    ys = y[sample_idx]
    for f in feats:
        xv = X[sample_idx, f]
        order = np.argsort(xv, kind="stable")
        xs = xv[order]
        ts = ys[order]
        if xs[0] == xs[-1]:
            continue
        pos = np.nonzero(xs[:-1] < xs[1:])[0]
        thr = (xs[pos] + xs[pos + 1]) / 2.0
        ok = thr < xs[pos + 1]  # guard midpoints that round up to the right value
        pos = pos[ok]
        thr = thr[ok]
        if pos.size == 0:
            continue
        csum = np.cumsum(ts)
        csq = np.cumsum(ts * ts)
        total_sum = csum[-1]
        total_sq = csq[-1]
        nl = pos + 1
        nr = m - nl
        sl = csum[pos]
        ql = csq[pos]
        sse = (ql - sl * sl / nl) + ((total_sq - ql) - (total_sum - sl) ** 2 / nr)
        j = int(np.argmin(sse))
        if sse[j] < best_sse:
            best_sse = sse[j]
            best = (int(f), float(thr[j]))
    return best


def _grow_tree(X, y, params, rng):
    n, d = X.shape
    mtry = params.mtry if params.mtry is not None else int(math.ceil(d / 3.0))
    mtry = min(mtry, d)
    if params.bootstrap:
        root_idx = rng.integers(0, n, size=n)
    else:
        root_idx = np.arange(n)

    feature = []
    threshold = []
    left = []
    right = []
    value = []
    count = []

    def build(sample_idx, depth):
        node = len(feature)
        ys = y[sample_idx]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(ys.mean()))
        count.append(int(sample_idx.shape[0]))
        if sample_idx.shape[0] <= params.min_leaf:
            return node
        if params.max_depth is not None and depth >= params.max_depth:
            return node
        if ys.min() == ys.max():
            return node
        feats = np.sort(rng.choice(d, size=mtry, replace=False))
        split = _best_split(X, y, sample_idx, feats)
        if split is None:
            return node
        f, thr = split
        go_left = X[sample_idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = build(sample_idx[go_left], depth + 1)
        right[node] = build(sample_idx[~go_left], depth + 1)
        return node

    build(root_idx, 0)
    return Tree(np.array(feature, dtype=np.int32),
                np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.int32),
                np.array(right, dtype=np.int32),
                np.array(value, dtype=np.float64),
                np.array(count, dtype=np.int32))


def train(rows, params=None, seed=0):
    """Train a forest on (feature vector, target) rows.

    Each tree gets its own RNG stream derived from (seed, tree index), drawing
    first the bootstrap sample, then the per-node feature subsets in
    depth-first order.
    """
    if params is None:
        params = ForestParams()
    rows = list(rows)
    if len(rows) == 0:
        raise ValueError("empty training set")
    X = np.array([np.asarray(r[0], dtype=np.float64) for r in rows])
    y = np.array([float(r[1]) for r in rows])
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng([seed, t])
        trees.append(_grow_tree(X, y, params, rng))
    return Forest(trees, X.shape[1], params, seed)


def _tree_value(tree, x):
    node = 0
    while tree.feature[node] >= 0:
        if x[tree.feature[node]] <= tree.threshold[node]:
            node = tree.left[node]
        else:
            node = tree.right[node]
    return tree.value[node]


def predict(forest, x):
    """Mean over trees of the leaf value the sample reaches in each tree."""
    if not forest.trees:
        raise ValueError("untrained forest")
    x = np.asarray(x, dtype=np.float64)
    return float(sum(_tree_value(t, x) for t in forest.trees) / len(forest.trees))


def predict_many(forest, X):
    """Predictions for each row of X."""
    return np.array([predict(forest, x) for x in np.asarray(X, dtype=np.float64)])


def save(forest, path):
    """Serialize a forest to a binary model file.

    Layout (little-endian): magic "SFOR", u32 version, u32 n_trees,
    u32 n_features, i32 mtry (-1 = auto), u32 min_leaf, i32 max_depth
    (-1 = unlimited), u8 bootstrap, i64 seed; then per tree a u32 node count
    followed by the pre-order node arrays feature (i32), threshold (f64),
    left (i32), right (i32), value (f64), count (i32).
    """
    p = forest.params
    parts = [_MAGIC,
             struct.pack("<IIIiIiBq", _VERSION, len(forest.trees),
                         forest.n_features,
                         -1 if p.mtry is None else p.mtry,
                         p.min_leaf,
                         -1 if p.max_depth is None else p.max_depth,
                         1 if p.bootstrap else 0,
                         forest.seed)]
    for tree in forest.trees:
        parts.append(struct.pack("<I", tree.feature.shape[0]))
        parts.append(tree.feature.astype("<i4").tobytes())
        parts.append(tree.threshold.astype("<f8").tobytes())
        parts.append(tree.left.astype("<i4").tobytes())
        parts.append(tree.right.astype("<i4").tobytes())
        parts.append(tree.value.astype("<f8").tobytes())
        parts.append(tree.count.astype("<i4").tobytes())
    with open(path, "wb") as f:
        f.write(b"".join(parts))


class _Cursor:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise ForestFormatError("truncated model file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def array(self, dtype, n):
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(n * itemsize), dtype=dtype).copy()


def load(path):
    """Read a model file written by save; rejects unknown magic or version."""
    with open(path, "rb") as f:
        data = f.read()
    cur = _Cursor(data)
    magic = cur.take(4)
    if magic != _MAGIC:
        raise ForestFormatError("not a forest model file (version mismatch)")
    (version, n_trees, n_features, mtry, min_leaf, max_depth, bootstrap,
     seed) = struct.unpack("<IIIiIiBq", cur.take(struct.calcsize("<IIIiIiBq")))
    if version != _VERSION:
        raise ForestFormatError("unsupported model version %d" % version)
    params = ForestParams(n_trees=n_trees,
                          mtry=None if mtry < 0 else mtry,
                          min_leaf=min_leaf,
                          max_depth=None if max_depth < 0 else max_depth,
                          bootstrap=bool(bootstrap))
    trees = []
    for _ in range(n_trees):
        (n_nodes,) = struct.unpack("<I", cur.take(4))
        trees.append(Tree(cur.array("<i4", n_nodes),
                          cur.array("<f8", n_nodes),
                          cur.array("<i4", n_nodes),
                          cur.array("<i4", n_nodes),
                          cur.array("<f8", n_nodes),
                          cur.array("<i4", n_nodes)))
    return Forest(trees, n_features, params, seed)
