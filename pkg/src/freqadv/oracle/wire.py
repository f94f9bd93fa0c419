"""Wire protocol message types, score parsing, and similarity helpers.

The oracle speaks JSON over HTTP:

    POST /v1/realism  {"image_png_b64": str, "query": str}
                      -> {"score_text": str, "model_id": str}
    POST /v1/caption  {"image_png_b64": str, "query": str}
                      -> {"caption": str, "model_id": str}
    POST /v1/embed    {"text": str}
                      -> {"vector": [number, ...], "dim": int}

score_text is raw model output; the caller parses it locally with
parse_score so the scoring heuristic is versioned with this package, not
with whatever serves the model.
"""
from __future__ import annotations

import base64
import binascii
import json
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..errors import OracleParseError, ProtocolError, UndefinedSimilarityError

SCORE_MIN = 0
SCORE_MAX = 10

_SLASH_TEN = re.compile(r"(\d+)\s*(?:/|out\s+of)\s*10")
_INTEGER = re.compile(r"\d+")


def parse_score(text: str) -> int:
    """Extract a 0-10 realism score from free-form oracle text.

    An in-range integer adjacent to a "/10" (or "out of 10") pattern is
    preferred; otherwise the first integer in [0, 10] anywhere in the text
    wins. Out-of-range integers are skipped, never clamped.

    Raises:
        OracleParseError: When no usable score is present. There is no
            default score; an unparseable reply is an error.
    """
    for match in _SLASH_TEN.finditer(text):
        value = int(match.group(1))
        if SCORE_MIN <= value <= SCORE_MAX:
            return value
    for match in _INTEGER.finditer(text):
        value = int(match.group(0))
        if SCORE_MIN <= value <= SCORE_MAX:
            return value
    raise OracleParseError(f"no integer in [0, 10] found in reply: {text!r}")


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity between two vectors.

    Raises:
        UndefinedSimilarityError: If either vector has zero norm.
        ValueError: If the vectors disagree in length.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError(f"vector lengths differ: {u.shape[0]} vs {v.shape[0]}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise UndefinedSimilarityError("cosine similarity undefined for zero vector")
    return float(np.dot(u, v) / (nu * nv))


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class RealismRequest:
    image_png_b64: str
    query: str

    def to_json(self) -> str:
        return _canonical({"image_png_b64": self.image_png_b64, "query": self.query})

    @classmethod
    def from_json(cls, text: str) -> "RealismRequest":
        data = _decode_object(text, required={"image_png_b64": str, "query": str})
        return cls(image_png_b64=data["image_png_b64"], query=data["query"])

    def image_bytes(self) -> bytes:
        return decode_png_b64(self.image_png_b64)


@dataclass(frozen=True)
class RealismResponse:
    score_text: str
    model_id: str

    def to_json(self) -> str:
        return _canonical({"model_id": self.model_id, "score_text": self.score_text})

    @classmethod
    def from_json(cls, text: str) -> "RealismResponse":
        data = _decode_object(text, required={"score_text": str, "model_id": str})
        return cls(score_text=data["score_text"], model_id=data["model_id"])


@dataclass(frozen=True)
class CaptionRequest:
    image_png_b64: str
    query: str

    def to_json(self) -> str:
        return _canonical({"image_png_b64": self.image_png_b64, "query": self.query})

    @classmethod
    def from_json(cls, text: str) -> "CaptionRequest":
        data = _decode_object(text, required={"image_png_b64": str, "query": str})
        return cls(image_png_b64=data["image_png_b64"], query=data["query"])

    def image_bytes(self) -> bytes:
        return decode_png_b64(self.image_png_b64)


@dataclass(frozen=True)
class CaptionResponse:
    caption: str
    model_id: str

    def to_json(self) -> str:
        return _canonical({"caption": self.caption, "model_id": self.model_id})

    @classmethod
    def from_json(cls, text: str) -> "CaptionResponse":
        data = _decode_object(text, required={"caption": str, "model_id": str})
        return cls(caption=data["caption"], model_id=data["model_id"])


@dataclass(frozen=True)
class EmbedRequest:
    text: str

    def to_json(self) -> str:
        return _canonical({"text": self.text})

    @classmethod
    def from_json(cls, text: str) -> "EmbedRequest":
        data = _decode_object(text, required={"text": str})
        return cls(text=data["text"])


@dataclass(frozen=True)
class EmbedResponse:
    vector: tuple[float, ...]
    dim: int

    def to_json(self) -> str:
        return _canonical({"dim": self.dim, "vector": list(self.vector)})

    @classmethod
    def from_json(cls, text: str) -> "EmbedResponse":
        data = _decode_object(text, required={"vector": list, "dim": int})
        if len(data["vector"]) != data["dim"]:
            raise ProtocolError(
                f"embed response dim={data['dim']} but vector has "
                f"{len(data['vector'])} entries"
            )
        try:
            vector = tuple(float(x) for x in data["vector"])
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"embed vector holds non-numeric entry: {exc}") from exc
        return cls(vector=vector, dim=data["dim"])


def _decode_object(text: str, required: dict[str, type]) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"message is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ProtocolError(f"message must be a JSON object, got {type(data).__name__}")
    for key, typ in required.items():
        if key not in data:
            raise ProtocolError(f"message missing required field {key!r}")
        if typ is int:
            if isinstance(data[key], bool) or not isinstance(data[key], int):
                raise ProtocolError(f"field {key!r} must be an integer")
        elif not isinstance(data[key], typ):
            raise ProtocolError(f"field {key!r} must be {typ.__name__}")
    return data


def decode_png_b64(payload: str) -> bytes:
    """Decode the base64 image field of a request.

    Raises:
        ProtocolError: On invalid base64.
    """
    try:
        return base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ProtocolError(f"image_png_b64 is not valid base64: {exc}") from exc


def encode_png_b64(png: bytes) -> str:
    return base64.b64encode(png).decode("ascii")


def load_schema(name: str) -> dict:
    """Load one of the published JSON schemas by stem name.

    Valid names: realism_request, realism_response, caption_request,
    caption_response, embed_request, embed_response.
    """
    ref = resources.files("freqadv.schemas").joinpath(f"{name}.schema.json")
    return json.loads(ref.read_text(encoding="utf-8"))
