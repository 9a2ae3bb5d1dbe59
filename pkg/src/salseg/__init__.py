"""Fixation-driven salient object segmentation toolkit.

Turns eye-fixation data into salient-object segmentations by scoring object
proposals with a regression forest over shape and fixation-distribution
features, and provides the matching benchmark metrics and dataset-bias
statistics.
"""

__version__ = "0.1.0"

from . import (fixproc, forest, metrics, pipeline, proposals, raster, segfeat,
               stats, synth)
from .fixproc import FixationSet, detect_fixations, render_fixation_map
from .metrics import dataset_f, f_measure, iou, pr_curve, roc_auc, shuffled_auc
from .pipeline import (ExperimentConfig, compose_topk, load_dataset,
                       run_experiment)
from .raster import ImageFormatError, load_image
from .segfeat import FEATURE_NAMES, extract
from .synth import synth_dataset
