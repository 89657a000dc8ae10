"""Forward-only backend running exported TorchScript encoder graphs.

A manifest JSON describes the pair of graphs and the tokenizer:

    {
      "name": "...", "architecture_id": "...", "weights_id": "...",
      "embed_dim": 512, "input_size": 224,
      "image_mean": [r, g, b], "image_std": [r, g, b],
      "image_graph": "image.pt", "text_graph": "text.pt",
      "vocab": "vocab.json", "context_length": 16
    }

Relative paths resolve against the manifest's directory. The image graph
maps a normalized float32 (1, 3, S, S) tensor to (1, F); the text graph
maps int64 token ids (1, L) to (1, F). Tokenization is a lowercase
word-level lookup with an "<unk>" fallback and zero padding; prompts longer
than context_length raise TokenizeError. Exported graphs are run forward
only, so supports_pullback is false.
"""

from __future__ import annotations

import json
import re
import warnings
from pathlib import Path

import numpy as np

from ..errors import BackendUnavailableError, TokenizeError, ZeroNormError
from ..image import RgbImage
from .base import BackendDescriptor, EmbeddingBackend

_WORD_RE = re.compile(r"[a-z0-9']+")


class GraphBackend(EmbeddingBackend):

    def __init__(self, manifest_path):
        try:
            import torch
        except ImportError as exc:  # pragma: no cover
            raise BackendUnavailableError(
                "the graph backend requires torch to load TorchScript graphs") from exc
        self._torch = torch

        manifest_path = Path(manifest_path)
        try:
            manifest = json.loads(manifest_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise BackendUnavailableError(f"cannot read manifest: {exc}") from exc
        base = manifest_path.parent

        try:
            self._descriptor = BackendDescriptor(
                name=str(manifest.get("name", manifest_path.stem)),
                architecture_id=str(manifest["architecture_id"]),
                weights_id=str(manifest["weights_id"]),
                embed_dim=int(manifest["embed_dim"]),
                input_size=int(manifest["input_size"]),
                supports_pullback=False,
            )
            self._mean = np.asarray(manifest["image_mean"], dtype=np.float64).reshape(3, 1, 1)
            self._std = np.asarray(manifest["image_std"], dtype=np.float64).reshape(3, 1, 1)
            self._context_length = int(manifest["context_length"])
            vocab_path = base / manifest["vocab"]
            image_path = base / manifest["image_graph"]
            text_path = base / manifest["text_graph"]
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendUnavailableError(f"malformed manifest: {exc}") from exc

        try:
            self._vocab = json.loads(Path(vocab_path).read_text())
            with warnings.catch_warnings():
                # torch.jit.load is deprecated upstream but remains the
                # stable interchange format for exported encoder graphs.
                warnings.simplefilter("ignore", DeprecationWarning)
                self._image_graph = torch.jit.load(str(image_path), map_location="cpu").eval()
                self._text_graph = torch.jit.load(str(text_path), map_location="cpu").eval()
        except (OSError, RuntimeError, json.JSONDecodeError) as exc:
            raise BackendUnavailableError(f"cannot load graphs: {exc}") from exc
        if "<unk>" not in self._vocab:
            raise BackendUnavailableError("vocab must define an '<unk>' token")

    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def embed_image(self, img: RgbImage) -> np.ndarray:
        self.check_image(img)
        torch = self._torch
        normalized = (img.samples - self._mean) / self._std
        x = torch.from_numpy(normalized.astype(np.float32)).unsqueeze(0)
        with torch.no_grad():
            out = self._image_graph(x)
        return self._as_embedding(out)

    def embed_text(self, prompt: str) -> np.ndarray:
        torch = self._torch
        ids = self._tokenize(prompt)
        x = torch.from_numpy(ids[None, :])
        with torch.no_grad():
            out = self._text_graph(x)
        return self._as_embedding(out)

    def _tokenize(self, prompt: str) -> np.ndarray:
        words = _WORD_RE.findall(prompt.lower())
        if not words:
            raise TokenizeError("prompt contains no tokens")
        if len(words) > self._context_length:
            raise TokenizeError(
                f"prompt has {len(words)} tokens, limit is {self._context_length}")
        unk = self._vocab["<unk>"]
        ids = np.zeros(self._context_length, dtype=np.int64)
        for i, word in enumerate(words):
            ids[i] = self._vocab.get(word, unk)
        return ids

    def _as_embedding(self, out) -> np.ndarray:
        vec = out.detach().cpu().numpy().reshape(-1).astype(np.float64)
        dim = self._descriptor.embed_dim
        if vec.shape != (dim,):
            raise BackendUnavailableError(
                f"graph returned {vec.shape[0]} values, manifest says {dim}")
        if not np.all(np.isfinite(vec)) or not np.any(vec):
            raise ZeroNormError("graph produced a non-finite or zero embedding")
        return vec
