"""The sidecar's HTTP surface (the normative embedding wire protocol).

    GET  /v1/info            model metadata
    POST /v1/embed_image     {"width","height","data_b64"} -> {"dim","vector"}
    POST /v1/embed_text      {"text"} -> {"dim","vector"}
    POST /v1/pullback_image  image + {"cotangent"} -> image-shaped gradient
    GET  /v1/selftest        pullback-vs-finite-differences check

Images travel as base64 little-endian float32, channel-major RGB. Shape
and token errors are HTTP 400; requests arriving before the model finished
loading get HTTP 503. The model loads in a background thread so the
process can bind its port immediately.
"""

from __future__ import annotations

import base64
import threading

import numpy as np
from fastapi import FastAPI, HTTPException, Request

from .models import BaseAdapter, TokenLimitError, adapter_from_env


def decode_wire_image(doc: dict) -> np.ndarray:
    try:
        width = int(doc["width"])
        height = int(doc["height"])
        raw = base64.b64decode(doc["data_b64"])
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(400, detail=f"malformed image payload: {exc}")
    expected = 3 * width * height * 4
    if width < 1 or height < 1 or len(raw) != expected:
        raise HTTPException(
            400, detail=f"payload is {len(raw)} bytes, expected {expected} "
                        f"for 3x{height}x{width} float32")
    arr = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return arr.reshape(3, height, width)


def encode_wire_image(samples: np.ndarray) -> dict:
    arr = np.ascontiguousarray(samples, dtype="<f4")
    return {
        "width": int(samples.shape[2]),
        "height": int(samples.shape[1]),
        "data_b64": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def create_app(adapter_factory=adapter_from_env) -> FastAPI:
    app = FastAPI(title="ccmtune embedding sidecar")
    state = {"adapter": None, "error": None}
    ready = threading.Event()

    def load():
        try:
            state["adapter"] = adapter_factory()
        except Exception as exc:
            state["error"] = f"model load failed: {exc}"
        finally:
            ready.set()

    threading.Thread(target=load, daemon=True).start()

    def adapter() -> BaseAdapter:
        if not ready.is_set():
            raise HTTPException(503, detail="model is still loading")
        if state["error"] is not None:
            raise HTTPException(503, detail=state["error"])
        return state["adapter"]

    def check_size(samples, model):
        size = model.input_size
        if samples.shape[1] != size or samples.shape[2] != size:
            raise HTTPException(
                400, detail=f"expected {size}x{size} input, got "
                            f"{samples.shape[2]}x{samples.shape[1]}")

    @app.get("/v1/info")
    def info():
        return adapter().info()

    @app.post("/v1/embed_image")
    async def embed_image(request: Request):
        model = adapter()
        doc = await request.json()
        samples = decode_wire_image(doc)
        check_size(samples, model)
        vec = model.embed_image(samples)
        return {"dim": int(vec.shape[0]), "vector": vec.tolist()}

    @app.post("/v1/embed_text")
    async def embed_text(request: Request):
        model = adapter()
        doc = await request.json()
        text = doc.get("text")
        if not isinstance(text, str) or not text:
            raise HTTPException(400, detail="'text' must be a non-empty string")
        try:
            vec = model.embed_text(text)
        except TokenLimitError as exc:
            raise HTTPException(400, detail=str(exc))
        return {"dim": int(vec.shape[0]), "vector": vec.tolist()}

    @app.post("/v1/pullback_image")
    async def pullback_image(request: Request):
        model = adapter()
        doc = await request.json()
        samples = decode_wire_image(doc)
        check_size(samples, model)
        cot = np.asarray(doc.get("cotangent", []), dtype=np.float64)
        if cot.shape != (model.embed_dim,):
            raise HTTPException(
                400, detail=f"cotangent must have {model.embed_dim} entries, "
                            f"got {cot.shape}")
        grad = model.pullback(samples, cot)
        return encode_wire_image(grad)

    @app.get("/v1/selftest")
    def selftest(pixels: int = 5, tolerance: float = 1e-2):
        """Autograd pullback vs central finite differences on random pixels."""
        model = adapter()
        rng = np.random.default_rng(0)
        size = model.input_size
        samples = rng.uniform(0.1, 0.9, (3, size, size))
        cot = rng.standard_normal(model.embed_dim)
        grad = model.pullback(samples, cot)
        h = 1e-4
        checks = []
        for _ in range(pixels):
            c = int(rng.integers(0, 3))
            y = int(rng.integers(0, size))
            x = int(rng.integers(0, size))
            up = samples.copy()
            up[c, y, x] += h
            dn = samples.copy()
            dn[c, y, x] -= h
            fd = float((cot @ model.embed_image(up) - cot @ model.embed_image(dn)) / (2 * h))
            rel = abs(fd - grad[c, y, x]) / max(abs(fd), 1e-9)
            checks.append({"channel": c, "y": y, "x": x,
                           "fd": fd, "autograd": float(grad[c, y, x]),
                           "rel_error": float(rel)})
        max_rel = max(ch["rel_error"] for ch in checks)
        return {"pass": bool(max_rel < tolerance), "max_rel_error": max_rel,
                "tolerance": tolerance, "checks": checks}

    return app
