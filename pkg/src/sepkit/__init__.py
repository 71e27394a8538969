"""Correcting ensembles for legacy classifiers and a separation-bound lab.

The pipeline taps a deployed classifier's internal feature vectors, labels
each as correct or erroneous, and builds a small ensemble of linear
threshold nodes (optionally cascaded with a second hyperplane each) that
fires on the errors so a correcting action can override the output. The
theory half evaluates the concentration-of-measure bounds that justify the
construction and validates them by Monte Carlo.
"""

from .cascade import CascadePair, complementary_set, fit_second_stage, pair_fire, project_to_hyperplane
from .cluster import Clustering, kmeans, positive_correlation_report
from .data import (
    CORRECT,
    ERROR,
    LabeledDataset,
    RngSpec,
    load_dataset,
    sample_product_cube,
    save_dataset,
)
from .ensemble import (
    ALG1,
    ALG2,
    BuildReport,
    CorrectingAction,
    CorrectingEnsemble,
    apply,
    fire_mask,
    fit_ensemble,
    iterate,
    load_model,
    save_model,
)
from .errors import (
    DataFormatError,
    EmptyEnsembleError,
    ModelFormatError,
    NumericalError,
    SepkitError,
    ValidationError,
)
from .evaluate import (
    PerformanceCurve,
    ScoredPrediction,
    corrected_curve,
    curve,
    decide,
    split_train_test,
    tally,
)
from .nodes import CorrectorNode, build_nodes, fisher_weights, node_fire, node_threshold
from .preprocess import PreprocessModel, center, fit_preprocess, kaiser_guttman_select, transform
from .synth import CaseStudy, SynthSpec, calibrate_noise_scale, generate_casestudy
from .theory import Bound, TheoryConfig

__version__ = "0.1.0"
