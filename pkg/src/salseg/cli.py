"""Command-line interface: one binary, ten subcommands.

Common flags: --root (dataset root), --seed, --config (key=value file),
--out. Exit code 0 on success, 2 on validation errors.
"""

import argparse
import os
import sys

import numpy as np

from . import fixproc, metrics, pipeline, proposals, segfeat, stats
from . import forest as forest_mod
from .forest import ForestFormatError
from .raster import ImageFormatError, load_image, read_map, write_map
from .synth import synth_dataset


def _read_config(path):
    cfg = {}
    if path is None:
        return cfg
    with open(path, "r") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError("%s: expected key=value, got %r" % (path, line))
            key, value = line.split("=", 1)
            cfg[key.strip()] = value.strip()
    return cfg


def _experiment_config(args, conf):
    cfg = pipeline.ExperimentConfig(seed=args.seed)
    if "k" in conf:
        cfg.k = int(conf["k"])
    if "train_fraction" in conf:
        cfg.train_fraction = float(conf["train_fraction"])
    if "n_folds" in conf:
        cfg.n_folds = int(conf["n_folds"])
    if "fixation_source" in conf:
        cfg.fixation_source = conf["fixation_source"]
    if "n_trees" in conf:
        cfg.n_trees = int(conf["n_trees"])
    if "min_leaf" in conf:
        cfg.min_leaf = int(conf["min_leaf"])
    if "mtry" in conf:
        cfg.mtry = int(conf["mtry"])
    if "max_depth" in conf:
        cfg.max_depth = int(conf["max_depth"])
    if "first_n" in conf:
        cfg.first_n = int(conf["first_n"])
    if "mask_threshold" in conf:
        cfg.mask_threshold = float(conf["mask_threshold"])
    return cfg


def _require(args, flag):
    value = getattr(args, flag)
    if value is None:
        raise ValueError("--%s is required for this subcommand" % flag)
    return value


def _dataset_name(root):
    return os.path.basename(os.path.normpath(root))


def _image_sizes(index):
    sizes = {}
    for image_id in index.image_ids:
        img = load_image(index.image_paths[image_id])
        sizes[image_id] = (img.shape[1], img.shape[0])
    return sizes


def cmd_synth(args, conf):
    root = _require(args, "root")
    n_images = int(conf.get("n_images", 40))
    w = int(conf.get("width", 160))
    h = int(conf.get("height", 120))
    synth_dataset(n_images, w, h, args.seed, root)
    print("wrote %d synthetic images under %s" % (n_images, root))
    return 0


def cmd_fixmap(args, conf):
    index = pipeline.load_dataset(_require(args, "root"))
    out = _require(args, "out")
    sigma_frac = float(conf.get("sigma_frac", fixproc.MAP_SIGMA_FRAC))
    os.makedirs(out, exist_ok=True)
    for image_id in index.image_ids:
        img = load_image(index.image_paths[image_id])
        h, w = img.shape[:2]
        sets = pipeline.load_fixation_sets(index, image_id)
        for fs in sets:
            fix_dir = os.path.join(out, "fixations", fs.subject_id)
            os.makedirs(fix_dir, exist_ok=True)
            fixproc.write_fixations_csv(
                os.path.join(fix_dir, image_id + ".csv"), fs.fixations)
        m = fixproc.render_fixation_map(sets, w, h, sigma_frac)
        write_map(os.path.join(out, image_id + ".pgm"), m)
    print("wrote fixation maps for %d images to %s" % (len(index.image_ids), out))
    return 0


def cmd_stats(args, conf):
    index = pipeline.load_dataset(_require(args, "root"))
    out = _require(args, "out")
    bins = int(conf.get("bins", stats.DEFAULT_BINS))
    rows = []
    for image_id in index.image_ids:
        img = load_image(index.image_paths[image_id])
        edge_map = stats.default_edge_map(img)
        gt = pipeline.load_ground_truth(index, image_id)
        for oid, mask in zip(gt.object_ids, gt.object_masks):
            rows.append(stats.compute_object_stats(
                img, mask, image_id, oid, edge_map=edge_map, bins=bins))
    stats.write_stats_csv(out, rows)
    hist_path = os.path.splitext(out)[0] + "_hist.csv"
    stats.write_stats_hist_csv(hist_path, rows)
    print("wrote %d object rows to %s and histograms to %s"
          % (len(rows), out, hist_path))
    return 0


def _consistency_values(index, seed):
    sizes = _image_sizes(index)
    details, subjects = pipeline.load_click_details(index)
    clicks = pipeline.load_clicks(index)
    per_image_sets = []
    set_sizes = []
    per_image_masks = []
    for image_id in index.image_ids:
        sets = pipeline.load_fixation_sets(index, image_id)
        if len(sets) >= 2:
            per_image_sets.append(sets)
            set_sizes.append(sizes[image_id])
        gt = pipeline.load_ground_truth(index, image_id, clicks)
        masks = pipeline.subject_click_masks(gt, image_id, details, subjects)
        if len(masks) >= 2:
            per_image_masks.append(masks)
    fix_value = metrics.consistency_fixation(per_image_sets, set_sizes,
                                             seed=seed)
    seg_value = metrics.consistency_segmentation(per_image_masks, seed=seed)
    return fix_value, seg_value, len(per_image_sets)


def cmd_consistency(args, conf):
    index = pipeline.load_dataset(_require(args, "root"))
    out = _require(args, "out")
    fix_value, seg_value, n = _consistency_values(index, args.seed)
    name = _dataset_name(args.root)
    metrics.write_scores_csv(out, [
        ("consistency-fixation", name, "human", fix_value, n),
        ("consistency-segmentation", name, "human", seg_value, n),
    ])
    print("consistency-fixation %.4f consistency-segmentation %.4f"
          % (fix_value, seg_value))
    return 0


def cmd_eval_fixation(args, conf):
    index = pipeline.load_dataset(_require(args, "root"))
    out = _require(args, "out")
    algorithm = conf.get("algorithm")
    if not algorithm:
        raise ValueError("config must set algorithm=<name>")
    center_bias = int(conf.get("center_bias", 0))
    n_splits = int(conf.get("n_splits", 20))
    rng = np.random.default_rng(args.seed)
    all_pixels = {}
    for image_id in index.image_ids:
        img = load_image(index.image_paths[image_id])
        h, w = img.shape[:2]
        sets = pipeline.load_fixation_sets(index, image_id)
        pts = sorted(metrics.fixation_pixels(sets, w, h))
        all_pixels[image_id] = (pts, (w, h))
    aucs = []
    saucs = []
    for image_id in index.image_ids:
        pts, (w, h) = all_pixels[image_id]
        if not pts:
            continue
        path = os.path.join(index.root, "maps", algorithm, image_id + ".pgm")
        if not os.path.exists(path):
            raise ValueError("missing map %s for image %s" % (algorithm,
                                                              image_id))
        m = read_map(path)
        if center_bias:
            m = fixproc.add_center_bias(m)
        pos = np.array(pts)
        fixated = set(pts)
        grid = [(x, y) for y in range(h) for x in range(w)
                if (x, y) not in fixated]
        idx = rng.choice(len(grid), size=min(10 * len(pts), len(grid)),
                         replace=False)
        neg = np.array([grid[i] for i in idx])
        aucs.append(metrics.roc_auc(m, pos, neg))
        other = [p for other_id in index.image_ids if other_id != image_id
                 for p in all_pixels[other_id][0]]
        if other:
            saucs.append(metrics.shuffled_auc(
                m, pos, np.array(other), n_splits=n_splits,
                seed=int(rng.integers(2 ** 31))))
    if not aucs:
        raise ValueError("no image had fixations")
    name = _dataset_name(args.root)
    rows = [("auc", name, algorithm, float(np.mean(aucs)), len(aucs))]
    if saucs:
        rows.append(("sauc", name, algorithm, float(np.mean(saucs)),
                     len(saucs)))
    metrics.write_scores_csv(out, rows)
    for metric, _, _, value, n in rows:
        print("%s %s %.4f over %d images" % (metric, algorithm, value, n))
    return 0


def cmd_eval_salobj(args, conf):
    index = pipeline.load_dataset(_require(args, "root"))
    out = _require(args, "out")
    algorithm = conf.get("algorithm")
    if not algorithm:
        raise ValueError("config must set algorithm=<name>")
    maps = []
    gts = []
    clicks = pipeline.load_clicks(index)
    for image_id in index.image_ids:
        path = os.path.join(index.root, "maps", algorithm, image_id + ".pgm")
        if not os.path.exists(path):
            raise ValueError("missing map %s for image %s" % (algorithm,
                                                              image_id))
        maps.append(read_map(path))
        gts.append(pipeline.load_ground_truth(index, image_id, clicks).combined)
    value = metrics.dataset_f(maps, gts)
    name = _dataset_name(args.root)
    metrics.write_scores_csv(out, [("fmeasure", name, algorithm, value,
                                    len(maps))])
    if "pr_dump" in conf:
        metrics.write_pr_csv(conf["pr_dump"], metrics.pr_curve(maps, gts))
    print("fmeasure %s %.4f over %d images" % (algorithm, value, len(maps)))
    return 0


def cmd_train(args, conf):
    index = pipeline.load_dataset(_require(args, "root"))
    out = _require(args, "out")
    cfg = _experiment_config(args, conf)
    prep = pipeline.prepare_images(index, cfg)
    rows = []
    for item in prep:
        rows.extend(zip(item.features, item.targets))
    model = forest_mod.train(rows, pipeline._forest_params(cfg), seed=args.seed)
    forest_mod.save(model, out)
    if "features_out" in conf:
        feature_rows = []
        for item in prep:
            for rank, (vec, target) in enumerate(zip(item.features,
                                                     item.targets)):
                feature_rows.append((item.image_id, rank + 1, vec, target))
        segfeat.write_features_csv(conf["features_out"], feature_rows)
    print("trained on %d segments from %d images; model saved to %s"
          % (len(rows), len(prep), out))
    return 0


def cmd_predict(args, conf):
    index = pipeline.load_dataset(_require(args, "root"))
    out = _require(args, "out")
    model_path = conf.get("model")
    if not model_path:
        raise ValueError("config must set model=<path>")
    cfg = _experiment_config(args, conf)
    model = forest_mod.load(model_path)
    os.makedirs(out, exist_ok=True)
    for image_id in index.image_ids:
        img = load_image(index.image_paths[image_id])
        pool = proposals.load_pool(
            os.path.join(index.root, "segments", image_id), image_id)
        energy = pipeline.load_energy_map(index, image_id, cfg, img.shape[:2])
        feats = [segfeat.extract(c.mask, energy) for c in pool.candidates]
        scores = forest_mod.predict_many(model, np.array(feats))
        m = pipeline.compose_topk(pool, scores, cfg.k)
        write_map(os.path.join(out, image_id + ".pgm"), m)
    print("wrote predicted maps for %d images to %s"
          % (len(index.image_ids), out))
    return 0


def cmd_ksweep(args, conf):
    index = pipeline.load_dataset(_require(args, "root"))
    out = _require(args, "out")
    cfg = _experiment_config(args, conf)
    ks = [int(v) for v in conf.get("ks", "1,5,10,20,50").split(",")]
    rows = pipeline.ksweep(index, cfg, ks)
    pipeline.write_ksweep_csv(out, rows)
    for k, value in rows:
        print("K=%d F=%.4f" % (k, value))
    return 0


def cmd_bench(args, conf):
    index = pipeline.load_dataset(_require(args, "root"))
    out = _require(args, "out")
    cfg = _experiment_config(args, conf)
    name = _dataset_name(args.root)
    n = len(index.image_ids)

    model = pipeline.run_experiment(index, cfg)
    baseline = pipeline.run_experiment(index, cfg, score_mode="external-rank")
    gt_pool = pipeline.upper_bound_selector(index, cfg)
    best_overlap = pipeline.upper_bound_segmenter(index, cfg.first_n)
    fix_value, seg_value, n_fix = _consistency_values(index, args.seed)

    rows = [
        ("fmeasure", name, "model-topk", model.mean_f, n),
        ("fmeasure", name, "external-rank", baseline.mean_f, n),
        ("fmeasure", name, "gt-pool-model", gt_pool.mean_f, n),
        ("fmeasure", name, "best-overlap", best_overlap, n),
        ("consistency-fixation", name, "human", fix_value, n_fix),
        ("consistency-segmentation", name, "human", seg_value, n),
    ]
    metrics.write_scores_csv(out, rows)

    labels = [r[2] if r[0] == "fmeasure" else r[0] for r in rows]
    width = max(len(x) for x in labels) + 2
    print("dataset: %s (%d images, K=%d)" % (name, n, cfg.k))
    print("%-*s%s" % (width, "method", "score"))
    print("-" * (width + 6))
    for label, row in zip(labels, rows):
        print("%-*s%.4f" % (width, label, row[3]))
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "fixmap": cmd_fixmap,
    "stats": cmd_stats,
    "consistency": cmd_consistency,
    "eval-fixation": cmd_eval_fixation,
    "eval-salobj": cmd_eval_salobj,
    "train": cmd_train,
    "predict": cmd_predict,
    "ksweep": cmd_ksweep,
    "bench": cmd_bench,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="salseg",
        description="Fixation-driven salient object segmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--root", help="dataset root directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--out", help="output file or directory")
    args = parser.parse_args(argv)
    try:
        conf = _read_config(args.config)
        return _COMMANDS[args.command](args, conf)
    except (ValueError, OSError, ImageFormatError, ForestFormatError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
