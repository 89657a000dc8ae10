"""The vibrant/dull evaluation harness.

For each corpus image two tuning runs are performed, one with keyword
"vibrant" and one with "dull". Both outputs are display-encoded (clamped,
quantized) and scored with the colorfulness statistic and the antonym-pair
attribute score; the reported deltas are unweighted means over images.
Metrics are computed on the display output because that is what a viewer
compares.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from . import ccm
from .embedding.base import EmbeddingBackend
from .image import PreprocessSpec, RgbImage, decode_image, encode_display, preprocess_geometry
from .metrics import colorfulness
from .objective import PromptSpec, TwoPromptSpec, clip_iqa_score
from .optimizer import TuneConfig, tune

IQA_POSITIVE_PROMPT = "Colorful photo."
IQA_NEGATIVE_PROMPT = "Dull photo."


@dataclass(frozen=True)
class ImageResult:
    image_id: str
    c_vibrant: float
    c_dull: float
    iqa_vibrant: float
    iqa_dull: float


@dataclass
class ExperimentReport:
    per_image: list[ImageResult] = field(default_factory=list)
    delta_c: float = 0.0
    delta_clip_iqa: float = 0.0
    config_vibrant: Optional[TuneConfig] = None
    config_dull: Optional[TuneConfig] = None
    failures: list[tuple[str, str]] = field(default_factory=list)

    def recompute_means(self):
        n = len(self.per_image)
        if n == 0:
            self.delta_c = 0.0
            self.delta_clip_iqa = 0.0
            return
        self.delta_c = sum(r.c_vibrant - r.c_dull for r in self.per_image) / n
        self.delta_clip_iqa = sum(r.iqa_vibrant - r.iqa_dull for r in self.per_image) / n

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["image_id", "C_vibrant", "C_dull", "iqa_vibrant", "iqa_dull"])
        for r in self.per_image:
            writer.writerow([r.image_id, repr(r.c_vibrant), repr(r.c_dull),
                             repr(r.iqa_vibrant), repr(r.iqa_dull)])
        return buf.getvalue()

    def summary_dict(self) -> dict:
        from .optimizer import config_to_dict
        return {
            "delta_C": self.delta_c,
            "delta_clip_iqa": self.delta_clip_iqa,
            "images": len(self.per_image),
            "failures": [{"image_id": i, "error": e} for i, e in self.failures],
            "config_vibrant": config_to_dict(self.config_vibrant) if self.config_vibrant else None,
            "config_dull": config_to_dict(self.config_dull) if self.config_dull else None,
        }

    def to_summary_json(self) -> str:
        return json.dumps(self.summary_dict(), indent=2)


def _with_keyword(config: TuneConfig, keyword: str) -> TuneConfig:
    """Clone the config with the objective keyword swapped in."""
    obj = config.objective
    base = obj.prompt_a if isinstance(obj, TwoPromptSpec) else obj
    prompt = PromptSpec(template_id=base.template_id, keyword=keyword,
                        content_description=base.content_description)
    return replace(config, objective=prompt)


def _display_output(img: RgbImage, matrix: ccm.CcmMatrix) -> RgbImage:
    return decode_image(encode_display(ccm.apply(matrix, img)))


def _score_image(img: RgbImage, backend: EmbeddingBackend,
                 pos_emb, neg_emb) -> float:
    spec = PreprocessSpec(target_size=backend.descriptor().input_size)
    emb = backend.embed_image(preprocess_geometry(img, spec))
    return clip_iqa_score(emb, pos_emb, neg_emb)


def vibrant_dull_experiment(images: list[tuple[str, RgbImage]],
                            base_config: TuneConfig,
                            backend: EmbeddingBackend,
                            jobs: int = 1) -> ExperimentReport:
    """Tune every image twice ("vibrant", "dull"), score, and aggregate.

    `images` is a list of (image_id, image). A failed image is excluded
    from the means and listed in report.failures.
    """
    if not images:
        raise ValueError("need at least one image")
    config_vibrant = _with_keyword(base_config, "vibrant")
    config_dull = _with_keyword(base_config, "dull")
    pos_emb = backend.embed_text(IQA_POSITIVE_PROMPT)
    neg_emb = backend.embed_text(IQA_NEGATIVE_PROMPT)

    def run_one(item):
        image_id, img = item
        vib = tune(img, config_vibrant, backend)
        dul = tune(img, config_dull, backend)
        out_vib = _display_output(img, vib.final_matrix)
        out_dul = _display_output(img, dul.final_matrix)
        return ImageResult(
            image_id=image_id,
            c_vibrant=colorfulness(out_vib),
            c_dull=colorfulness(out_dul),
            iqa_vibrant=_score_image(out_vib, backend, pos_emb, neg_emb),
            iqa_dull=_score_image(out_dul, backend, pos_emb, neg_emb),
        )

    report = ExperimentReport(config_vibrant=config_vibrant, config_dull=config_dull)
    if jobs <= 1:
        outcomes = []
        for item in images:
            try:
                outcomes.append((item[0], run_one(item), None))
            except Exception as exc:
                outcomes.append((item[0], None, str(exc)))
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [(item[0], pool.submit(run_one, item)) for item in images]
            outcomes = []
            for image_id, fut in futures:
                try:
                    outcomes.append((image_id, fut.result(), None))
                except Exception as exc:
                    outcomes.append((image_id, None, str(exc)))

    for image_id, result, error in outcomes:
        if result is not None:
            report.per_image.append(result)
        else:
            report.failures.append((image_id, error))
    report.recompute_means()
    return report
