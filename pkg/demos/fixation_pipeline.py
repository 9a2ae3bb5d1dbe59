#!/usr/bin/env python3
"""Turn raw gaze logs into fixations and a smoothed fixation map.

Reads the gaze CSVs of one image from a dataset root (build one with
make_dataset.py), runs velocity-threshold fixation detection per subject,
and writes the pooled fixation map as a PGM next to a per-subject count
summary on stdout.
"""

import argparse
import os

from salseg import fixproc, pipeline, raster


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default="demo_output/dataset")
    ap.add_argument("--out", default="demo_output/fixmap.pgm")
    args = ap.parse_args()

    idx = pipeline.load_dataset(args.root)
    image_id = idx.image_ids[0]
    img = raster.load_image(idx.image_paths[image_id])
    h, w = img.shape[:2]

    sets = []
    for subject in idx.gaze_subjects:
        path = os.path.join(args.root, "fixations", subject, image_id + ".csv")
        samples = fixproc.read_gaze_csv(path)
        fixes = fixproc.detect_fixations(samples)
        sets.append(fixproc.FixationSet(image_id, subject, fixes))
        span = samples[-1, 0] - samples[0, 0]
        print("%s: %3d gaze samples over %5.0f ms -> %2d fixations"
              % (subject, len(samples), span, len(fixes)))

    m = fixproc.render_fixation_map(sets, w, h)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    raster.write_map(args.out, m)
    print("pooled map for %s written to %s" % (image_id, args.out))


if __name__ == "__main__":
    main()
