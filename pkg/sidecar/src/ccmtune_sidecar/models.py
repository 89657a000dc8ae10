"""Model adapters behind the sidecar's HTTP surface.

An adapter embeds [0, 1] channel-major RGB arrays and text prompts, and
computes input gradients by autograd. Photometric normalization (the
per-channel mean/std published with the weights) happens inside the
adapter, so pullbacks are always with respect to the [0, 1] input.

Two adapters:

  * `TinyClipAdapter` - a small deterministic random-weight CLIP-style
    model (float64). No downloads, loads in milliseconds; used by the
    conformance tests and any offline environment.
  * `TransformersClipAdapter` - pretrained CLIP checkpoints via the
    `transformers` library. `SIDECAR_WEIGHTS` takes a HuggingFace id or a
    local path; the default is the ViT-B-32 / laion2b pairing.

`SIDECAR_ARCH` selects: "tiny" or "hf" (default "hf").
"""

from __future__ import annotations

import os
import threading

import numpy as np
import torch

DEFAULT_HF_WEIGHTS = "laion/CLIP-ViT-B-32-laion2B-s34B-b79K"


class TokenLimitError(ValueError):
    pass


class BaseAdapter:
    """Serialized model access plus a text-embedding cache."""

    name: str
    architecture_id: str
    weights_id: str
    embed_dim: int
    input_size: int

    def __init__(self):
        self._infer_lock = threading.Lock()
        self._text_cache: dict[str, np.ndarray] = {}
        self._cache_lock = threading.Lock()

    def info(self) -> dict:
        return {
            "name": self.name,
            "architecture_id": self.architecture_id,
            "weights_id": self.weights_id,
            "embed_dim": self.embed_dim,
            "input_size": self.input_size,
            "supports_pullback": True,
        }

    def embed_image(self, samples: np.ndarray) -> np.ndarray:
        with self._infer_lock:
            return self._embed_image(samples)

    def embed_text(self, text: str) -> np.ndarray:
        with self._cache_lock:
            cached = self._text_cache.get(text)
        if cached is not None:
            return cached.copy()
        with self._infer_lock:
            vec = self._embed_text(text)
        with self._cache_lock:
            self._text_cache.setdefault(text, vec)
        return vec.copy()

    def pullback(self, samples: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        with self._infer_lock:
            return self._pullback(samples, cotangent)

    # subclass hooks, called under the inference lock
    def _embed_image(self, samples):
        raise NotImplementedError

    def _embed_text(self, text):
        raise NotImplementedError

    def _pullback(self, samples, cotangent):
        raise NotImplementedError


class _TinyImageEncoder(torch.nn.Module):

    def __init__(self, embed_dim: int, mean, std):
        super().__init__()
        self.register_buffer("mean", torch.tensor(mean).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(std).view(1, 3, 1, 1))
        self.conv1 = torch.nn.Conv2d(3, 8, kernel_size=8, stride=8)
        self.conv2 = torch.nn.Conv2d(8, 16, kernel_size=4, stride=4)
        self.head = torch.nn.Linear(16, embed_dim)

    def forward(self, x):
        x = (x - self.mean) / self.std
        h = torch.nn.functional.gelu(self.conv1(x))
        h = torch.nn.functional.gelu(self.conv2(h))
        return self.head(h.mean(dim=(2, 3)))


class _TinyTextEncoder(torch.nn.Module):

    def __init__(self, embed_dim: int):
        super().__init__()
        self.table = torch.nn.Embedding(256, 32)
        self.head = torch.nn.Linear(32, embed_dim)

    def forward(self, ids):
        return self.head(self.table(ids).mean(dim=1))


class TinyClipAdapter(BaseAdapter):
    """Deterministic random-weight stand-in with real autograd pullbacks."""

    name = "tiny-clip"
    architecture_id = "tiny-conv-clip"
    weights_id = "random-seed0"
    embed_dim = 32
    input_size = 64
    context_limit = 77  # bytes of UTF-8

    IMAGE_MEAN = (0.48145466, 0.4578275, 0.40821073)
    IMAGE_STD = (0.26862954, 0.26130258, 0.27577711)

    def __init__(self):
        super().__init__()
        with torch.random.fork_rng():
            torch.manual_seed(0)
            self.image_encoder = _TinyImageEncoder(
                self.embed_dim, self.IMAGE_MEAN, self.IMAGE_STD).double().eval()
            self.text_encoder = _TinyTextEncoder(self.embed_dim).double().eval()
        for p in self.image_encoder.parameters():
            p.requires_grad_(False)
        for p in self.text_encoder.parameters():
            p.requires_grad_(False)

    def _tokenize(self, text: str) -> torch.Tensor:
        data = text.lower().encode("utf-8")
        if len(data) > self.context_limit:
            raise TokenLimitError(
                f"prompt is {len(data)} bytes, limit is {self.context_limit}")
        if not data:
            raise TokenLimitError("prompt is empty")
        return torch.tensor(list(data), dtype=torch.long).unsqueeze(0)

    def _embed_image(self, samples):
        x = torch.from_numpy(np.asarray(samples, dtype=np.float64)).unsqueeze(0)
        with torch.no_grad():
            out = self.image_encoder(x)
        return out.squeeze(0).numpy()

    def _embed_text(self, text):
        ids = self._tokenize(text)
        with torch.no_grad():
            out = self.text_encoder(ids)
        return out.squeeze(0).numpy()

    def _pullback(self, samples, cotangent):
        x = torch.from_numpy(np.asarray(samples, dtype=np.float64)).unsqueeze(0)
        x.requires_grad_(True)
        out = self.image_encoder(x)
        cot = torch.from_numpy(np.asarray(cotangent, dtype=np.float64))
        (out.squeeze(0) @ cot).backward()
        return x.grad.squeeze(0).numpy()


class TransformersClipAdapter(BaseAdapter):
    """Pretrained CLIP checkpoints from the transformers library."""

    name = "clip"

    def __init__(self, weights_id: str = DEFAULT_HF_WEIGHTS):
        super().__init__()
        from transformers import CLIPModel, CLIPProcessor

        self.weights_id = weights_id
        self.model = CLIPModel.from_pretrained(weights_id).eval()
        self.processor = CLIPProcessor.from_pretrained(weights_id)
        for p in self.model.parameters():
            p.requires_grad_(False)

        self.architecture_id = self.model.config.model_type
        self.embed_dim = int(self.model.config.projection_dim)
        image_processor = self.processor.image_processor
        crop = image_processor.crop_size
        self.input_size = int(crop["height"] if isinstance(crop, dict) else crop)
        mean = torch.tensor(image_processor.image_mean).view(1, 3, 1, 1)
        std = torch.tensor(image_processor.image_std).view(1, 3, 1, 1)
        self._mean, self._std = mean, std

    def _image_features(self, x):
        return self.model.get_image_features(pixel_values=(x - self._mean) / self._std)

    def _embed_image(self, samples):
        x = torch.from_numpy(np.asarray(samples, dtype=np.float32)).unsqueeze(0)
        with torch.no_grad():
            out = self._image_features(x)
        return out.squeeze(0).numpy().astype(np.float64)

    def _embed_text(self, text):
        tokenizer = self.processor.tokenizer
        encoded = tokenizer([text], return_tensors="pt", truncation=False)
        limit = tokenizer.model_max_length
        if encoded["input_ids"].shape[1] > limit:
            raise TokenLimitError(
                f"prompt is {encoded['input_ids'].shape[1]} tokens, limit is {limit}")
        with torch.no_grad():
            out = self.model.get_text_features(**encoded)
        return out.squeeze(0).numpy().astype(np.float64)

    def _pullback(self, samples, cotangent):
        x = torch.from_numpy(np.asarray(samples, dtype=np.float32)).unsqueeze(0)
        x.requires_grad_(True)
        out = self._image_features(x)
        cot = torch.from_numpy(np.asarray(cotangent, dtype=np.float32))
        (out.squeeze(0) @ cot).backward()
        return x.grad.squeeze(0).numpy().astype(np.float64)


def adapter_from_env(env=os.environ) -> BaseAdapter:
    arch = env.get("SIDECAR_ARCH", "hf").lower()
    if arch == "tiny":
        return TinyClipAdapter()
    if arch in ("hf", "clip", "transformers"):
        return TransformersClipAdapter(env.get("SIDECAR_WEIGHTS", DEFAULT_HF_WEIGHTS))
    raise ValueError(f"unknown SIDECAR_ARCH {arch!r} (expected 'tiny' or 'hf')")
