"""HTTP client for a remote embedding sidecar speaking the wire protocol.

Endpoints: GET /v1/info, POST /v1/embed_image, POST /v1/embed_text,
POST /v1/pullback_image. Images travel as base64 little-endian float32,
channel-major RGB. HTTP 400 maps to shape/token errors, 503 and transport
failures to BackendUnavailableError.
"""

from __future__ import annotations

import numpy as np
import requests

from ..errors import (
    BackendUnavailableError,
    PullbackUnsupportedError,
    ShapeError,
    TokenizeError,
    ZeroNormError,
)
from ..image import RgbImage
from .base import BackendDescriptor, EmbeddingBackend, image_from_wire, image_to_wire


class RemoteBackend(EmbeddingBackend):

    def __init__(self, url: str, timeout: float = 120.0, session=None):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._text_cache: dict[str, np.ndarray] = {}
        info = self._get_json("/v1/info")
        try:
            self._descriptor = BackendDescriptor(
                name=str(info["name"]),
                architecture_id=str(info["architecture_id"]),
                weights_id=str(info["weights_id"]),
                embed_dim=int(info["embed_dim"]),
                input_size=int(info["input_size"]),
                supports_pullback=bool(info["supports_pullback"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendUnavailableError(f"malformed /v1/info response: {exc}") from exc

    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def embed_image(self, img: RgbImage) -> np.ndarray:
        self.check_image(img)
        doc = self._post_json("/v1/embed_image", image_to_wire(img.samples))
        return self._vector(doc)

    def embed_text(self, prompt: str) -> np.ndarray:
        cached = self._text_cache.get(prompt)
        if cached is None:
            doc = self._post_json("/v1/embed_text", {"text": prompt},
                                  tokenizing=True)
            cached = self._vector(doc)
            self._text_cache[prompt] = cached
        return cached.copy()

    def image_pullback(self, img: RgbImage, cotangent: np.ndarray) -> RgbImage:
        if not self._descriptor.supports_pullback:
            raise PullbackUnsupportedError(
                f"backend {self._descriptor.name!r} does not advertise pullbacks")
        self.check_image(img)
        payload = image_to_wire(img.samples)
        payload["cotangent"] = [float(v) for v in np.asarray(cotangent).reshape(-1)]
        doc = self._post_json("/v1/pullback_image", payload)
        return RgbImage(image_from_wire(doc))

    def _vector(self, doc: dict) -> np.ndarray:
        try:
            vec = np.asarray(doc["vector"], dtype=np.float64)
            dim = int(doc["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendUnavailableError(f"malformed embedding response: {exc}") from exc
        if vec.shape != (dim,) or dim != self._descriptor.embed_dim:
            raise ShapeError(
                f"embedding has shape {vec.shape}, expected ({self._descriptor.embed_dim},)")
        if not np.all(np.isfinite(vec)) or not np.any(vec):
            raise ZeroNormError("sidecar returned a non-finite or zero embedding")
        return vec

    def _get_json(self, path: str) -> dict:
        try:
            resp = self._session.get(self.url + path, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailableError(f"cannot reach sidecar at {self.url}: {exc}") from exc
        return self._handle(resp)

    def _post_json(self, path: str, payload: dict, tokenizing: bool = False) -> dict:
        try:
            resp = self._session.post(self.url + path, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailableError(f"cannot reach sidecar at {self.url}: {exc}") from exc
        return self._handle(resp, tokenizing=tokenizing)

    @staticmethod
    def _handle(resp, tokenizing: bool = False) -> dict:
        if resp.status_code == 400:
            detail = _error_detail(resp)
            if tokenizing:
                raise TokenizeError(detail)
            raise ShapeError(detail)
        if resp.status_code == 503:
            raise BackendUnavailableError(_error_detail(resp))
        if resp.status_code != 200:
            raise BackendUnavailableError(
                f"sidecar returned HTTP {resp.status_code}: {_error_detail(resp)}")
        return resp.json()


def _error_detail(resp) -> str:
    try:
        doc = resp.json()
        return str(doc.get("detail", doc))
    except ValueError:
        return resp.text[:200]
