"""Deterministic in-process oracles for testing the attack path end to end.

None of these consult a model. The realism mock scores an image by how
much spectral energy sits inside a fixed band; the caption mock buckets
that energy and emits a fixed caption per bucket; the embedder projects
text onto pseudorandom sign vectors. All three are pure functions of
their inputs, so identical image bytes always produce identical replies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyInputError, ProtocolError
from ..image import Image
from ..spectral import BandMask, band_mask, forward_raw
from ..util import fnv1a64, round_half_up, splitmix64

DEFAULT_EMBED_DIM = 256


def band_energy(img: Image, mask: BandMask) -> float:
    """Mean squared spectral coefficient magnitude inside a band.

    Averaged over band coordinates and channels.
    """
    if (img.height, img.width) != (mask.height, mask.width):
        raise ValueError(
            f"image {img.height}x{img.width} does not match mask grid "
            f"{mask.height}x{mask.width}"
        )
    coeffs = forward_raw(img.pixels)
    selected = coeffs[mask.inside, :]
    return float(np.mean(np.abs(selected) ** 2))


def _logistic(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass
class BandEnergyRealismMock:
    """Realism oracle driven by in-band spectral energy.

    score = clamp(round(10 * logistic(gain * (E - offset))), 0, 10)

    where E is band_energy of the queried image. gain = 0 degenerates to
    a constant score of 5; positive gain makes the score strictly
    monotone in E before rounding.
    """

    alpha1: float
    alpha2: float
    gain: float
    offset: float
    model_id: str = "mock-band-energy"

    def probability_for_energy(self, energy: float) -> float:
        """Pre-rounding logistic response in [0, 1]."""
        return _logistic(self.gain * (energy - self.offset))

    def score_for_energy(self, energy: float) -> int:
        score = round_half_up(10.0 * self.probability_for_energy(energy))
        return max(0, min(10, score))

    def score_image(self, img: Image) -> int:
        mask = band_mask(img.height, img.width, self.alpha1, self.alpha2)
        return self.score_for_energy(band_energy(img, mask))

    def realism_raw(self, image_png: bytes, query: str) -> str:
        return str(self.score_image(Image.from_bytes(image_png)))

    def caption(self, image_png: bytes, query: str) -> str:
        raise ProtocolError("band-energy mock does not serve captions")

    def embed(self, text: str) -> np.ndarray:
        raise ProtocolError("band-energy mock does not serve embeddings")


def mock_band_energy_oracle(
    band: tuple[float, float], gain: float, offset: float
) -> BandEnergyRealismMock:
    """Construct a band-energy realism mock for the given band."""
    return BandEnergyRealismMock(alpha1=band[0], alpha2=band[1], gain=gain, offset=offset)


def bucket_caption(bucket: int) -> str:
    """The fixed caption emitted for an energy bucket.

    Captions of distinct buckets share no whitespace token, so under the
    hash-projection embedder their cosine similarity is near zero.
    """
    return f"scene-{bucket:03d} texture-{bucket:03d}"


@dataclass
class BucketCaptionMock:
    """Caption oracle that buckets in-band spectral energy.

    The interval [e_min, e_max] is split into nbuckets equal cells; the
    queried image's band energy picks a cell (clamped at the ends) and
    the cell's fixed caption is returned. Perturbations that move the
    energy across a cell edge therefore change the caption, and with the
    hash-projection embedder the old/new caption cosine drops near zero.
    """

    alpha1: float
    alpha2: float
    nbuckets: int
    e_min: float
    e_max: float
    model_id: str = "mock-caption-bucket"

    def __post_init__(self) -> None:
        if self.nbuckets < 2:
            raise ValueError(f"nbuckets must be at least 2, got {self.nbuckets}")
        if not self.e_max > self.e_min:
            raise ValueError(
                f"e_max must exceed e_min, got [{self.e_min}, {self.e_max}]"
            )

    def bucket_for_energy(self, energy: float) -> int:
        width = (self.e_max - self.e_min) / self.nbuckets
        idx = int(math.floor((energy - self.e_min) / width))
        return max(0, min(self.nbuckets - 1, idx))

    def caption_image(self, img: Image) -> str:
        mask = band_mask(img.height, img.width, self.alpha1, self.alpha2)
        return bucket_caption(self.bucket_for_energy(band_energy(img, mask)))

    def caption(self, image_png: bytes, query: str) -> str:
        return self.caption_image(Image.from_bytes(image_png))

    def realism_raw(self, image_png: bytes, query: str) -> str:
        raise ProtocolError("bucket caption mock does not serve realism scores")

    def embed(self, text: str) -> np.ndarray:
        raise ProtocolError("bucket caption mock does not serve embeddings")


def mock_caption_oracle(
    band: tuple[float, float], nbuckets: int, e_min: float, e_max: float
) -> BucketCaptionMock:
    """Construct a bucketed caption mock over an explicit energy range."""
    return BucketCaptionMock(
        alpha1=band[0], alpha2=band[1], nbuckets=nbuckets, e_min=e_min, e_max=e_max
    )


def token_sign_vector(token: str, dim: int) -> np.ndarray:
    """Published hash-projection of one token onto {-1, +1}^dim.

    The splitmix64 stream is seeded with FNV-1a(utf8(token)); component j
    is +1 when output word j has its top bit set, else -1. The formula is
    fixed: independent implementations of the protocol reproduce it
    bit for bit.
    """
    state = fnv1a64(token.encode("utf-8"))
    out = np.empty(dim, dtype=np.float64)
    for j in range(dim):
        state, word = splitmix64(state)
        out[j] = 1.0 if word >> 63 else -1.0
    return out


@dataclass
class HashProjectionEmbedder:
    """Deterministic text embedder summing per-token sign vectors.

    Vectors are intentionally left unnormalized (integer components), so
    they serialize exactly over JSON and any two transports deliver
    bit-identical embeddings.
    """

    dim: int = DEFAULT_EMBED_DIM

    def __post_init__(self) -> None:
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        tokens = text.split()
        if not tokens:
            raise EmptyInputError("cannot embed empty text")
        total = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            vec = self._cache.get(token)
            if vec is None:
                vec = token_sign_vector(token, self.dim)
                self._cache[token] = vec
            total += vec
        return total

    def realism_raw(self, image_png: bytes, query: str) -> str:
        raise ProtocolError("embedder does not serve realism scores")

    def caption(self, image_png: bytes, query: str) -> str:
        raise ProtocolError("embedder does not serve captions")


@dataclass
class CompositeMockOracle:
    """Bundle of mocks exposing the full three-method oracle interface."""

    realism: BandEnergyRealismMock | None = None
    captioner: BucketCaptionMock | None = None
    embedder: HashProjectionEmbedder | None = None
    model_id: str = "mock-composite"

    def realism_raw(self, image_png: bytes, query: str) -> str:
        if self.realism is None:
            raise ProtocolError("no realism mock configured")
        return self.realism.realism_raw(image_png, query)

    def caption(self, image_png: bytes, query: str) -> str:
        if self.captioner is None:
            raise ProtocolError("no caption mock configured")
        return self.captioner.caption(image_png, query)

    def embed(self, text: str) -> np.ndarray:
        if self.embedder is None:
            raise ProtocolError("no embedder mock configured")
        return self.embedder.embed(text)


def expected_step_energy_shift(mask: BandMask, sigma: float, rho: float) -> float:
    """Expected change of mean band energy from one fresh perturbation.

    Each perturbed coordinate gains E|value|^2 = 2 sigma^2 (sigma^2 for
    self-paired ones); dividing the total by the band size gives the mean
    shift. Used to put mock parameters on the scale one attack step
    actually moves.
    """
    coords, self_paired = mask.hermitian_half()
    k = min(int(math.floor(rho * mask.height * mask.width)), coords.shape[0])
    if coords.shape[0] == 0:
        return 0.0
    frac = k / coords.shape[0]
    n_self = float(self_paired.sum()) * frac
    n_regular = 2.0 * (k - n_self)
    return (n_regular * 2.0 + n_self) * sigma**2 / mask.size


def candidate_energy_std(energy: float, mask: BandMask, sigma: float) -> float:
    """Approximate candidate-to-candidate std of the mean band energy.

    Dominated by the cross term between existing coefficients and fresh
    noise: var per perturbed coordinate is about 4 |F|^2 sigma^2.
    """
    return 2.0 * sigma * math.sqrt(max(energy, 0.0) / mask.size)


def calibrated_realism_mock(
    img: Image, band: tuple[float, float], sigma: float, rho: float = 0.1
) -> BandEnergyRealismMock:
    """Band-energy mock centered on an image's own baseline energy.

    The offset pins the unperturbed image at score 5; the gain is scaled
    so one expected attack step moves the logistic argument by about one
    unit, putting a realism flip within reach of a few greedy steps
    regardless of how much band energy the image started with.

    The baseline energy is measured on the quantized pixels, because that
    is what the oracle receives after PNG encoding; calibrating on the
    raw float pixels would shift the baseline score off center.
    """
    mask = band_mask(img.height, img.width, band[0], band[1])
    e0 = band_energy(Image(pixels=img.quantized()), mask)
    shift = expected_step_energy_shift(mask, sigma, rho)
    if shift <= 0.0:
        raise ValueError("band admits no perturbation energy; cannot calibrate")
    return mock_band_energy_oracle(band, gain=1.0 / shift, offset=e0)


def calibrated_caption_mock(
    img: Image,
    band: tuple[float, float],
    sigma: float,
    nbuckets: int = 63,
    bucket_stds: float = 2.0,
) -> BucketCaptionMock:
    """Bucket mock whose cells are sized to the attack's energy jitter.

    Cell width is bucket_stds candidate standard deviations; with an odd
    nbuckets the baseline energy sits at the exact center of the middle
    cell, so a caption change requires a genuine energy excursion rather
    than a knife-edge boundary.
    """
    if nbuckets % 2 == 0:
        raise ValueError("nbuckets must be odd so the baseline is cell-centered")
    mask = band_mask(img.height, img.width, band[0], band[1])
    e0 = band_energy(Image(pixels=img.quantized()), mask)
    width = bucket_stds * candidate_energy_std(e0, mask, sigma)
    if width <= 0.0:
        raise ValueError("degenerate energy scale; cannot calibrate caption mock")
    span = nbuckets * width
    return mock_caption_oracle(band, nbuckets, e_min=e0 - span / 2.0, e_max=e0 + span / 2.0)
