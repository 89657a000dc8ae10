"""Similarity measures and prompt-driven losses over embeddings.

The two-prompt target probability is computed as a sigmoid of the
similarity difference, p_A = sigmoid((s_A - s_B) / T). That is algebraically
the two-way softmax and numerically stable for any similarity values; it is
also written so that swapping (A, B, alpha) -> (B, A, 1 - alpha) produces
bit-identical losses and gradients (IEEE rounding is sign-symmetric).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, ZeroNormError

PROMPT_TEMPLATES = ("A", "B", "C", "D")


@dataclass(frozen=True)
class PromptSpec:
    """One prompt: a template id, a style keyword, and (template D only) a
    content description supplied by the caller."""

    template_id: str
    keyword: str
    content_description: Optional[str] = None

    def __post_init__(self):
        if self.template_id not in PROMPT_TEMPLATES:
            raise ValueError(f"template_id must be one of {PROMPT_TEMPLATES}")
        if not self.keyword:
            raise ValueError("keyword must be non-empty")
        has_content = self.content_description is not None
        if (self.template_id == "D") != has_content:
            raise ValueError("content_description is required iff template D")


@dataclass(frozen=True)
class TwoPromptSpec:
    """Interpolation objective between two prompts with target ratio alpha."""

    prompt_a: PromptSpec
    prompt_b: PromptSpec
    alpha: float = 0.5
    temperature: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")
        if not (self.temperature > 0):
            raise ValueError("temperature must be > 0")


def render_prompt(spec: PromptSpec) -> str:
    if spec.template_id == "A":
        return spec.keyword
    if spec.template_id == "B":
        return f"A {spec.keyword} photo"
    if spec.template_id == "C":
        return f"A photo that appears {spec.keyword}"
    return f"A {spec.keyword} photo of {spec.content_description}"


def _check_pair(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"embedding shapes differ: {a.shape} vs {b.shape}")


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine similarity undefined for zero-norm vector")
    return float(a @ b) / (na * nb)


def cosine_similarity_grad(a, b):
    """d cos(a, b) / d a, holding b fixed."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine similarity undefined for zero-norm vector")
    s = float(a @ b) / (na * nb)
    return b / (na * nb) - s * a / (na * na)


def single_prompt_loss(img_emb, txt_emb) -> float:
    """Negated cosine similarity; minimizing it maximizes prompt similarity."""
    return -cosine_similarity(img_emb, txt_emb)


def single_prompt_loss_grad(img_emb, txt_emb):
    """Returns (loss, d loss / d img_emb, similarity)."""
    s = cosine_similarity(img_emb, txt_emb)
    return -s, -cosine_similarity_grad(img_emb, txt_emb), s


def softmax_pair(s_a: float, s_b: float, temperature: float = 1.0) -> tuple[float, float]:
    """Two-way softmax of similarities, as (p_A, p_B), p_A + p_B ~ 1.

    Computed as a sigmoid of the difference: exact for equal inputs and
    stable for any magnitudes.
    """
    if not (temperature > 0):
        raise ValueError("temperature must be > 0")
    t = (s_a - s_b) / temperature
    u = math.tanh(0.5 * t)  # p_A - p_B
    return 0.5 * (1.0 + u), 0.5 * (1.0 - u)


def two_prompt_loss(img_emb, emb_a, emb_b, alpha: float, temperature: float = 1.0) -> float:
    """Squared deviation of the prompt-A softmax weight from the target alpha."""
    s_a = cosine_similarity(img_emb, emb_a)
    s_b = cosine_similarity(img_emb, emb_b)
    return _two_prompt_from_sims(s_a, s_b, alpha, temperature)[0]


def _two_prompt_from_sims(s_a, s_b, alpha, temperature):
    """(loss, p_a, dloss_dsa, dloss_dsb) from the two similarities.

    Written in terms of u = p_A - p_B = tanh((s_A - s_B) / 2T) and
    w = 1 - 2*alpha so that the (A,B,alpha) <-> (B,A,1-alpha) swap flips the
    signs of u and w exactly and the loss/gradient bits are identical.
    """
    if not (temperature > 0):
        raise ValueError("temperature must be > 0")
    t = (s_a - s_b) / temperature
    u = math.tanh(0.5 * t)
    w = 1.0 - 2.0 * alpha
    dev = 0.5 * (u + w)  # p_A - alpha
    loss = dev * dev
    # d dev / d s_a = (1 - u^2) / (4T); d/d s_b is its negation.
    dd = (1.0 - u * u) / (4.0 * temperature)
    dloss_dsa = 2.0 * dev * dd
    return loss, 0.5 * (1.0 + u), dloss_dsa, -dloss_dsa


def two_prompt_loss_grad(img_emb, emb_a, emb_b, alpha: float, temperature: float = 1.0):
    """Returns (loss, d loss / d img_emb, s_a, s_b, p_a)."""
    s_a = cosine_similarity(img_emb, emb_a)
    s_b = cosine_similarity(img_emb, emb_b)
    loss, p_a, dsa, dsb = _two_prompt_from_sims(s_a, s_b, alpha, temperature)
    grad = dsa * cosine_similarity_grad(img_emb, emb_a) \
        + dsb * cosine_similarity_grad(img_emb, emb_b)
    return loss, grad, s_a, s_b, p_a


def clip_iqa_score(img_emb, pos_emb, neg_emb) -> float:
    """Softmax weight of the positive prompt over an antonym pair, T = 1.

    Higher means the image carries more of the positive attribute.
    """
    s_pos = cosine_similarity(img_emb, pos_emb)
    s_neg = cosine_similarity(img_emb, neg_emb)
    return softmax_pair(s_pos, s_neg, 1.0)[0]
