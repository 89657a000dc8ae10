"""Prompt-guided tuning of a white-point-preserving 3x3 color matrix."""

from .ccm import CcmMatrix, CcmParams, apply, materialize, matrix_from_json, matrix_to_json, project, pullback
from .experiment import ExperimentReport, vibrant_dull_experiment
from .image import (
    PreprocessSpec,
    RgbImage,
    center_crop,
    decode_image,
    display_sized,
    encode_display,
    preprocess_geometry,
    resize_bilinear,
    resize_shorter_side,
)
from .metrics import colorfulness
from .objective import (
    PromptSpec,
    TwoPromptSpec,
    clip_iqa_score,
    cosine_similarity,
    render_prompt,
    single_prompt_loss,
    softmax_pair,
    two_prompt_loss,
)
from .optimizer import (
    Trajectory,
    TrajectoryRecord,
    TuneConfig,
    TuneResult,
    config_from_dict,
    config_to_dict,
    estimate_gradient_analytic,
    estimate_gradient_fd,
    estimate_gradient_spsa,
    tune,
    update_step,
)
from .embedding import BackendDescriptor, EmbeddingBackend, RemoteBackend, SyntheticBackend, load_graph_backend

__version__ = "0.1.0"
