"""Full-reference image quality via distance correlation of deep features."""

from . import errors
from .backbone import (
    BackboneWeights,
    ConvLayer,
    FeatureStack,
    IMAGENET_MEAN,
    IMAGENET_STD,
    STANDARD_TAPS,
    VGG19_LAYER_PLAN,
    conv2d_forward,
    extract_features,
    generate_test_backbone,
    load_image,
    load_weights,
    preprocess,
    resize_bilinear,
    save_image,
    write_weights,
)
from .dcor_core import (
    DcorConfig,
    double_center,
    grad_sample_dcorr,
    pairwise_distances,
    pearson_corr,
    sample_dcorr,
    sample_dcorr_naive,
    sample_dcov,
    sample_dvar,
)
from .evalkit import (
    DatasetManifest,
    EvalReport,
    LogisticParams,
    ManifestRecord,
    evaluate_manifest,
    fit_logistic,
    plcc_fitted,
    read_manifest,
    srcc,
    twoafc_score,
    write_manifest,
)
from .geotransform import GtConfig, TRANSFORM_KINDS, apply_transform, build_gt_dataset
from .metric import QualityScore, deepdc_score, layer_dcorr_profile
from .rng import SplitMix64, derive_substream
from .toy import ToyResult, run_toy

__version__ = "0.1.0"

__all__ = [
    "BackboneWeights",
    "ConvLayer",
    "DatasetManifest",
    "DcorConfig",
    "EvalReport",
    "FeatureStack",
    "GtConfig",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "LogisticParams",
    "ManifestRecord",
    "QualityScore",
    "STANDARD_TAPS",
    "SplitMix64",
    "TRANSFORM_KINDS",
    "ToyResult",
    "VGG19_LAYER_PLAN",
    "apply_transform",
    "build_gt_dataset",
    "conv2d_forward",
    "deepdc_score",
    "derive_substream",
    "double_center",
    "errors",
    "evaluate_manifest",
    "extract_features",
    "fit_logistic",
    "generate_test_backbone",
    "grad_sample_dcorr",
    "layer_dcorr_profile",
    "load_image",
    "load_weights",
    "pairwise_distances",
    "pearson_corr",
    "plcc_fitted",
    "preprocess",
    "read_manifest",
    "resize_bilinear",
    "run_toy",
    "sample_dcorr",
    "sample_dcorr_naive",
    "sample_dcov",
    "sample_dvar",
    "save_image",
    "srcc",
    "twoafc_score",
    "write_manifest",
    "write_weights",
]
