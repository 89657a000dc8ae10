"""The iterative tuning loop.

The matrix is optimized against the encoder-sized thumbnail, not the full
image: the color matrix is linear and commutes with the (linear, unclamped)
resize/crop, so the thumbnail optimum equals the full-image optimum at a
fraction of the pixels. The final matrix is applied to the full-resolution
image at export time.

Three gradient strategies: `analytic` chains the objective's closed-form
embedding gradient through the backend's image pullback and the matrix
adjoint; `fd_central` uses 12 extra loss evaluations per step; `spsa` uses
two. `auto` picks analytic when the backend supports pullbacks, otherwise
fd_central while the total call count stays affordable, otherwise spsa.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import ccm
from .embedding.base import EmbeddingBackend
from .errors import NonFiniteLossError
from .image import PreprocessSpec, RgbImage, preprocess_geometry
from .objective import (
    PromptSpec,
    TwoPromptSpec,
    cosine_similarity,
    render_prompt,
    single_prompt_loss_grad,
    two_prompt_loss_grad,
    _two_prompt_from_sims,
)

OPTIMIZER_KINDS = ("adam", "adamw", "sgd")
GRADIENT_STRATEGIES = ("auto", "analytic", "fd_central", "spsa")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
ADAMW_WEIGHT_DECAY = 1e-2


class ConfigError(ValueError):
    """Invalid tuning configuration; `field` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class TuneConfig:
    objective: Union[PromptSpec, TwoPromptSpec]
    tau: float = 0.25
    iterations: int = 1000
    learning_rate: float = 2e-3
    optimizer_kind: str = "adam"
    gradient_strategy: str = "auto"
    seed: int = 0
    snapshot_every: int = 50
    backend: str = "synthetic"
    fd_step: float = 1e-3
    spsa_step: float = 1e-2
    fd_call_budget: int = 20000
    early_stop: bool = False
    plateau_window: int = 100
    plateau_min_improvement: float = 1e-5

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations", "must be >= 1")
        if not (self.learning_rate > 0):
            raise ConfigError("learning_rate", "must be > 0")
        if not (self.tau > 0):
            raise ConfigError("tau", "must be > 0")
        if self.optimizer_kind not in OPTIMIZER_KINDS:
            raise ConfigError("optimizer", f"must be one of {OPTIMIZER_KINDS}")
        if self.gradient_strategy not in GRADIENT_STRATEGIES:
            raise ConfigError("gradient", f"must be one of {GRADIENT_STRATEGIES}")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every", "must be >= 1")
        if not (self.fd_step > 0):
            raise ConfigError("fd_step", "must be > 0")
        if not (self.spsa_step > 0):
            raise ConfigError("spsa_step", "must be > 0")


@dataclass(frozen=True)
class TrajectoryRecord:
    iteration: int
    loss: float
    sim_a: float
    sim_b: Optional[float] = None
    p_a: Optional[float] = None
    out_of_range_frac: float = 0.0

    def to_json(self) -> str:
        return json.dumps({
            "iter": self.iteration,
            "loss": self.loss,
            "sim_a": self.sim_a,
            "sim_b": self.sim_b,
            "p_a": self.p_a,
        })


@dataclass
class Trajectory:
    records: list[TrajectoryRecord] = field(default_factory=list)
    snapshots: list[tuple[int, ccm.CcmParams]] = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "\n".join(r.to_json() for r in self.records) + ("\n" if self.records else "")

    def snapshots_json(self) -> str:
        return json.dumps(
            [{"iter": it, "phi": params.as_dict()} for it, params in self.snapshots])


@dataclass(frozen=True)
class TuneResult:
    final_params: ccm.CcmParams
    final_matrix: ccm.CcmMatrix
    trajectory: Trajectory
    config_echo: TuneConfig
    wall_time: float


@dataclass
class OptimizerState:
    step: int = 0
    m: np.ndarray = field(default_factory=lambda: np.zeros(6))
    v: np.ndarray = field(default_factory=lambda: np.zeros(6))


def update_step(phi: np.ndarray, grad: np.ndarray, state: OptimizerState,
                kind: str, lr: float) -> tuple[np.ndarray, OptimizerState]:
    """One descent update on the six free parameters; caller projects after."""
    if kind == "sgd":
        return phi - lr * grad, state
    step = state.step + 1
    m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * grad
    v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * grad * grad
    m_hat = m / (1.0 - ADAM_BETA1 ** step)
    v_hat = v / (1.0 - ADAM_BETA2 ** step)
    direction = m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    if kind == "adamw":
        direction = direction + ADAMW_WEIGHT_DECAY * phi
    elif kind != "adam":
        raise ValueError(f"unknown optimizer kind {kind!r}")
    return phi - lr * direction, OptimizerState(step, m, v)


def estimate_gradient_fd(loss_fn: Callable[[np.ndarray], float], phi: np.ndarray,
                         h: float = 1e-3) -> np.ndarray:
    """Central differences per free parameter on the unprojected vector."""
    grad = np.empty(6)
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        hi = loss_fn(phi + e)
        lo = loss_fn(phi - e)
        grad[k] = (hi - lo) / (2.0 * h)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteLossError("finite-difference gradient is not finite")
    return grad


def estimate_gradient_spsa(loss_fn: Callable[[np.ndarray], float], phi: np.ndarray,
                           rng: np.random.Generator, c: float = 1e-2) -> np.ndarray:
    """Two-evaluation simultaneous-perturbation estimate with Rademacher draws."""
    delta = rng.integers(0, 2, size=6) * 2.0 - 1.0
    hi = loss_fn(phi + c * delta)
    lo = loss_fn(phi - c * delta)
    grad = (hi - lo) / (2.0 * c) * delta
    if not np.all(np.isfinite(grad)):
        raise NonFiniteLossError("SPSA gradient estimate is not finite")
    return grad


@dataclass(frozen=True)
class _Scalars:
    loss: float
    sim_a: float
    sim_b: Optional[float]
    p_a: Optional[float]


class CompiledObjective:
    """Text embeddings resolved once, plus scalar/gradient evaluation."""

    def __init__(self, objective: Union[PromptSpec, TwoPromptSpec],
                 backend: EmbeddingBackend):
        self.objective = objective
        if isinstance(objective, TwoPromptSpec):
            self.two_prompt = True
            self.emb_a = backend.embed_text(render_prompt(objective.prompt_a))
            self.emb_b = backend.embed_text(render_prompt(objective.prompt_b))
        else:
            self.two_prompt = False
            self.emb_a = backend.embed_text(render_prompt(objective))

    def scalars(self, img_emb: np.ndarray) -> _Scalars:
        if not self.two_prompt:
            s = cosine_similarity(img_emb, self.emb_a)
            return _Scalars(loss=-s, sim_a=s, sim_b=None, p_a=None)
        spec = self.objective
        s_a = cosine_similarity(img_emb, self.emb_a)
        s_b = cosine_similarity(img_emb, self.emb_b)
        loss, p_a, _, _ = _two_prompt_from_sims(s_a, s_b, spec.alpha, spec.temperature)
        return _Scalars(loss=loss, sim_a=s_a, sim_b=s_b, p_a=p_a)

    def cotangent(self, img_emb: np.ndarray) -> np.ndarray:
        """d loss / d image-embedding, in closed form."""
        if not self.two_prompt:
            _, grad, _ = single_prompt_loss_grad(img_emb, self.emb_a)
            return grad
        spec = self.objective
        _, grad, _, _, _ = two_prompt_loss_grad(
            img_emb, self.emb_a, self.emb_b, spec.alpha, spec.temperature)
        return grad


def estimate_gradient_analytic(thumb: RgbImage, params: ccm.CcmParams,
                               backend: EmbeddingBackend,
                               objective: CompiledObjective,
                               out: Optional[RgbImage] = None,
                               emb: Optional[np.ndarray] = None) -> np.ndarray:
    """Closed-form gradient chain: objective cotangent -> backend image
    pullback -> matrix adjoint. `out`/`emb` accept the already-evaluated
    styled thumbnail and its embedding so callers that just computed the
    loss don't pay for a second forward pass."""
    if out is None:
        out = ccm.apply(ccm.materialize(params), thumb)
    if emb is None:
        emb = backend.embed_image(out)
    cotangent = objective.cotangent(emb)
    grad_image = backend.image_pullback(out, cotangent)
    return ccm.pullback(thumb, grad_image)


def resolve_strategy(config: TuneConfig, backend: EmbeddingBackend) -> str:
    if config.gradient_strategy != "auto":
        return config.gradient_strategy
    if backend.descriptor().supports_pullback:
        return "analytic"
    if config.iterations * 13 <= config.fd_call_budget:
        return "fd_central"
    return "spsa"


def tune(img: RgbImage, config: TuneConfig, backend: EmbeddingBackend,
         on_record: Optional[Callable[[TrajectoryRecord], None]] = None,
         on_snapshot: Optional[Callable[[int, ccm.CcmParams], None]] = None) -> TuneResult:
    """Run the full tuning loop; deterministic for fixed (image, config, backend).

    Iteration scalars land in the trajectory every step; parameter snapshots
    every `snapshot_every` steps plus iteration 0 and the final step. The
    optional callbacks fire as each entry is appended, so callers can stream
    progress and keep a partial trajectory if the backend dies mid-run.
    """
    start = time.perf_counter()
    strategy = resolve_strategy(config, backend)
    compiled = CompiledObjective(config.objective, backend)
    spec = PreprocessSpec(target_size=backend.descriptor().input_size)
    thumb = preprocess_geometry(img, spec)
    rng = np.random.default_rng(config.seed)

    tau = config.tau
    phi = np.zeros(6)
    state = OptimizerState()
    trajectory = Trajectory()

    def evaluate(phi_vec: np.ndarray):
        out = ccm.apply(ccm.materialize(ccm.CcmParams(phi_vec, tau)), thumb)
        emb = backend.embed_image(out)
        return out, emb, compiled.scalars(emb)

    def loss_only(phi_vec: np.ndarray) -> float:
        return evaluate(phi_vec)[2].loss

    def push_record(iteration: int, scalars: _Scalars, out: RgbImage):
        if not np.isfinite(scalars.loss):
            raise NonFiniteLossError(
                f"loss became non-finite at iteration {iteration}",
                iteration=iteration, params=ccm.CcmParams(phi, tau))
        frac = float(np.mean((out.samples < 0.0) | (out.samples > 1.0)))
        rec = TrajectoryRecord(iteration, scalars.loss, scalars.sim_a,
                               scalars.sim_b, scalars.p_a, out_of_range_frac=frac)
        trajectory.records.append(rec)
        if on_record is not None:
            on_record(rec)

    def push_snapshot(iteration: int):
        params = ccm.CcmParams(phi, tau)
        trajectory.snapshots.append((iteration, params))
        if on_snapshot is not None:
            on_snapshot(iteration, params)

    out, emb, scalars = evaluate(phi)
    push_record(0, scalars, out)
    push_snapshot(0)

    best_loss = scalars.loss
    stale = 0
    for i in range(1, config.iterations + 1):
        if strategy == "analytic":
            grad = estimate_gradient_analytic(
                thumb, ccm.CcmParams(phi, tau), backend, compiled, out=out, emb=emb)
        elif strategy == "fd_central":
            grad = estimate_gradient_fd(loss_only, phi, config.fd_step)
        else:
            grad = estimate_gradient_spsa(loss_only, phi, rng, config.spsa_step)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteLossError(
                f"gradient became non-finite at iteration {i}",
                iteration=i, params=ccm.CcmParams(phi, tau))

        phi, state = update_step(phi, grad, state, config.optimizer_kind,
                                 config.learning_rate)
        phi = ccm.project(ccm.CcmParams(phi, tau)).off_diag

        out, emb, scalars = evaluate(phi)
        push_record(i, scalars, out)
        is_last = i == config.iterations
        if i % config.snapshot_every == 0 or is_last:
            push_snapshot(i)

        if scalars.loss < best_loss - config.plateau_min_improvement:
            best_loss = scalars.loss
            stale = 0
        else:
            stale += 1
        if config.early_stop and stale >= config.plateau_window:
            if not is_last and i % config.snapshot_every != 0:
                push_snapshot(i)
            break

    final_params = ccm.CcmParams(phi, tau)
    return TuneResult(
        final_params=final_params,
        final_matrix=ccm.materialize(final_params),
        trajectory=trajectory,
        config_echo=config,
        wall_time=time.perf_counter() - start,
    )


# --- wire / file format for TuneConfig -------------------------------------

def _prompt_to_dict(spec: PromptSpec) -> dict:
    return {"template": spec.template_id, "keyword": spec.keyword,
            "content": spec.content_description}


def _prompt_from_dict(doc: dict, field_name: str) -> PromptSpec:
    if not isinstance(doc, dict):
        raise ConfigError(field_name, "must be an object")
    try:
        return PromptSpec(
            template_id=doc.get("template", "B"),
            keyword=doc.get("keyword", ""),
            content_description=doc.get("content"),
        )
    except ValueError as exc:
        raise ConfigError(field_name, str(exc)) from exc


def config_to_dict(config: TuneConfig) -> dict:
    """Fully-resolved JSON form (every field, defaults included)."""
    obj = config.objective
    if isinstance(obj, TwoPromptSpec):
        prompt, prompt_b = obj.prompt_a, obj.prompt_b
        alpha, temperature = obj.alpha, obj.temperature
    else:
        prompt, prompt_b = obj, None
        alpha, temperature = 0.5, 1.0
    return {
        "prompt": _prompt_to_dict(prompt),
        "prompt_b": _prompt_to_dict(prompt_b) if prompt_b else None,
        "alpha": alpha,
        "temperature": temperature,
        "tau": config.tau,
        "iterations": config.iterations,
        "learning_rate": config.learning_rate,
        "optimizer": config.optimizer_kind,
        "gradient": config.gradient_strategy,
        "seed": config.seed,
        "snapshot_every": config.snapshot_every,
        "backend": config.backend,
        "fd_step": config.fd_step,
        "spsa_step": config.spsa_step,
        "fd_call_budget": config.fd_call_budget,
        "early_stop": config.early_stop,
        "plateau_window": config.plateau_window,
        "plateau_min_improvement": config.plateau_min_improvement,
    }


def _require_number(doc: dict, key: str, default, minimum=None, strict=False):
    value = doc.get(key, default)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(key, "must be a number")
    if minimum is not None:
        if strict and not (value > minimum):
            raise ConfigError(key, f"must be > {minimum}")
        if not strict and value < minimum:
            raise ConfigError(key, f"must be >= {minimum}")
    return value


def config_from_dict(doc: dict) -> TuneConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config", "must be a JSON object")
    prompt = _prompt_from_dict(doc.get("prompt"), "prompt")
    objective: Union[PromptSpec, TwoPromptSpec]
    if doc.get("prompt_b"):
        alpha = _require_number(doc, "alpha", 0.5)
        if not (0.0 <= alpha <= 1.0):
            raise ConfigError("alpha", "must be in [0, 1]")
        temperature = _require_number(doc, "temperature", 1.0, minimum=0.0, strict=True)
        objective = TwoPromptSpec(
            prompt_a=prompt,
            prompt_b=_prompt_from_dict(doc["prompt_b"], "prompt_b"),
            alpha=float(alpha),
            temperature=float(temperature),
        )
    else:
        objective = prompt
    try:
        return TuneConfig(
            objective=objective,
            tau=float(_require_number(doc, "tau", 0.25, minimum=0.0, strict=True)),
            iterations=int(_require_number(doc, "iterations", 1000, minimum=1)),
            learning_rate=float(_require_number(doc, "learning_rate", 2e-3,
                                                minimum=0.0, strict=True)),
            optimizer_kind=doc.get("optimizer", "adam"),
            gradient_strategy=doc.get("gradient", "auto"),
            seed=int(_require_number(doc, "seed", 0)),
            snapshot_every=int(_require_number(doc, "snapshot_every", 50, minimum=1)),
            backend=str(doc.get("backend", "synthetic")),
            fd_step=float(_require_number(doc, "fd_step", 1e-3, minimum=0.0, strict=True)),
            spsa_step=float(_require_number(doc, "spsa_step", 1e-2, minimum=0.0, strict=True)),
            fd_call_budget=int(_require_number(doc, "fd_call_budget", 20000, minimum=0)),
            early_stop=bool(doc.get("early_stop", False)),
            plateau_window=int(_require_number(doc, "plateau_window", 100, minimum=1)),
            plateau_min_improvement=float(_require_number(
                doc, "plateau_min_improvement", 1e-5, minimum=0.0)),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("config", str(exc)) from exc
