#!/usr/bin/env python3
"""Build a small synthetic benchmark set and summarize what is in it.

Produces <root>/ with images, per-object masks, a click table encoding which
objects the annotators picked, raw gaze logs for eight simulated subjects,
candidate segment pools, and a center-bias baseline map directory.
"""

import argparse

from salseg import pipeline, synth


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default="demo_output/dataset")
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    idx = synth.synth_dataset(args.n, 160, 120, args.seed, args.root)
    clicks = pipeline.load_clicks(idx)

    n_objects = 0
    n_salient = 0
    for image_id in idx.image_ids:
        gt = pipeline.load_ground_truth(idx, image_id, clicks)
        n_objects += len(gt.object_masks)
        n_salient += len(gt.salient_masks)

    print("dataset at %s" % args.root)
    print("  images           %d" % len(idx.image_ids))
    print("  gaze subjects    %d" % len(idx.gaze_subjects))
    print("  labeled objects  %d" % n_objects)
    print("  salient objects  %d" % n_salient)


if __name__ == "__main__":
    main()
