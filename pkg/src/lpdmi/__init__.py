"""Depth-video action recognition over multi-scale motion-image features.

Pipeline: depth sequences project onto front/side/top motion images,
which feed Gaussian/Laplacian pyramids; pyramid levels are resized per
view and described with dense oriented-gradient histograms; the cascaded
descriptors are min-max scaled, PCA-reduced, and classified by an extreme
learning machine. The `cli` module exposes every stage as a subcommand.
"""

from .depth_io import (
    CLASS_KINDS,
    DepthSequence,
    SyntheticSpec,
    load_sequence,
    save_sequence,
    synth_sequence,
    write_pgm,
)
from .elm import ElmModel, hidden_matrix, pinv, predict, train
from .errors import (
    AllBackgroundError,
    ConfigError,
    DataError,
    LpdmiError,
    NumericError,
    ParseError,
)
from .evaluation import (
    ACTION_SUBSETS,
    ConfusionMatrix,
    ExperimentReport,
    SplitSpec,
    confusion,
    evaluate,
    sequence_descriptor,
    split,
)
from .features import (
    FeatureVector,
    HogConfig,
    MinMaxScaler,
    NormalizationSpec,
    PcaModel,
    assemble_descriptor,
    descriptor_length,
    hog,
    minmax_apply,
    minmax_fit,
    pca_apply,
    pca_fit,
    resize_replicate,
)
from .projection import VIEWS, ProjectionConfig, compute_dmi, crop_roi, project_frame
from .pyramid import (
    KERNEL,
    KERNEL_1D,
    Pyramid,
    build_gaussian,
    build_laplacian,
    expand,
    max_levels,
    reconstruct,
    reduce,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
