"""Sequential-MNIST RNN training and hidden-state introspection toolkit.

A 200-unit vanilla tanh RNN reads each digit image one pixel row per
timestep. This package trains it with Adam on cross-entropy, runs three
input-perturbation experiments against the trained network (blanked tails,
truncated inputs, appended blank rows), and measures the geometry of its
hidden representations with PCA explained-variance dimensionality, exact
t-SNE embeddings and a k-NN class-purity score.
"""

from .geometry import (
    SpectrumResult,
    StateMatrix,
    capture_states,
    dimensionality_curve,
    knn_purity,
    pca_spectrum,
    per_class_spectra,
    stratified_subsample,
)
from .idx import (
    ImageSet,
    LabelSet,
    SequenceDataset,
    load_dataset,
    parse_idx_images,
    parse_idx_labels,
    to_sequences,
)
from .perturb import (
    AccuracyCurve,
    Kind,
    accuracy_sweep,
    blank_tail,
    pad_blank,
    transform_dataset,
    truncate,
)
from .rnn import (
    AdamState,
    Gradients,
    HiddenTrajectory,
    RnnParams,
    adam_step,
    bptt,
    forward,
    init_adam,
    init_params,
    loss_and_dlogits,
    predict,
)
from .training import (
    Checkpoint,
    EvalResult,
    TrainConfig,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .embedding import EmbeddingResult, tsne

__version__ = "0.1.0"

__all__ = [
    "AccuracyCurve",
    "AdamState",
    "Checkpoint",
    "EmbeddingResult",
    "EvalResult",
    "Gradients",
    "HiddenTrajectory",
    "ImageSet",
    "Kind",
    "LabelSet",
    "RnnParams",
    "SequenceDataset",
    "SpectrumResult",
    "StateMatrix",
    "TrainConfig",
    "accuracy_sweep",
    "adam_step",
    "blank_tail",
    "bptt",
    "capture_states",
    "dimensionality_curve",
    "evaluate",
    "forward",
    "init_adam",
    "init_params",
    "knn_purity",
    "load_checkpoint",
    "load_dataset",
    "loss_and_dlogits",
    "pad_blank",
    "parse_idx_images",
    "parse_idx_labels",
    "pca_spectrum",
    "per_class_spectra",
    "predict",
    "save_checkpoint",
    "stratified_subsample",
    "to_sequences",
    "train",
    "transform_dataset",
    "truncate",
    "tsne",
]
