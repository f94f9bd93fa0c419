"""Frequency-domain machinery: transforms, band masks, sparse perturbations.

Conventions, fixed for every consumer of this module:

* The forward transform is the plain unnormalized 2D DFT, so the DC
  coefficient equals the sum of pixel values. The inverse divides by H*W.
* Normalized radius r(u, v) measures distance from the DC coefficient
  after centering, divided by sqrt((H/2)^2 + (W/2)^2), so the grid
  corners sit at r = 1 exactly on even-sized grids.
* Perturbations are Hermitian-paired: a complex value at (u, v) is
  mirrored conjugated at ((H-u) mod H, (W-v) mod W), which keeps the
  inverse transform real up to floating-point noise. Self-paired
  coordinates (DC and Nyquist points) carry a purely real value.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyBandError,
    InvalidBandError,
    SymmetryViolationError,
)
from .image import Image

logger = logging.getLogger(__name__)

# Largest |imag| tolerated after an inverse transform, on the 0-255 pixel
# scale. Hermitian-symmetric inputs land many orders of magnitude below.
IMAG_TOLERANCE = 1e-3 * 255.0


@dataclass
class Spectrum:
    """Complex DFT coefficients of an image, shape (H, W, C)."""

    coefficients: np.ndarray = field(repr=False)

    @property
    def height(self) -> int:
        return self.coefficients.shape[0]

    @property
    def width(self) -> int:
        return self.coefficients.shape[1]

    @property
    def channels(self) -> int:
        return self.coefficients.shape[2]


def forward_raw(pixels: np.ndarray) -> np.ndarray:
    """Unnormalized 2D DFT over the first two axes of a pixel array."""
    return np.fft.fft2(np.asarray(pixels, dtype=np.float64), axes=(0, 1))


def inverse_raw(coefficients: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse 2D DFT (dividing by H*W).

    Returns:
        (real part, max absolute imaginary part encountered).
    """
    full = np.fft.ifft2(coefficients, axes=(0, 1))
    max_imag = float(np.abs(full.imag).max()) if full.size else 0.0
    return np.ascontiguousarray(full.real), max_imag


def forward_spectrum(img: Image) -> Spectrum:
    """Transform an image into its spectrum.

    The DC coefficient of each channel equals that channel's pixel sum.
    """
    return Spectrum(coefficients=forward_raw(img.pixels))


def inverse_spectrum(spectrum: Spectrum, *, quantize: bool = False) -> Image:
    """Transform a spectrum back into an image.

    The real part is taken and clamped to [0, 255]; with quantize=True the
    result is additionally rounded to whole 8-bit levels, which is the
    form every attack iteration operates on.

    Raises:
        SymmetryViolationError: When the imaginary residue exceeds
            IMAG_TOLERANCE, meaning the coefficients were not
            Hermitian-symmetric.
    """
    real, max_imag = inverse_raw(spectrum.coefficients)
    if max_imag > IMAG_TOLERANCE:
        raise SymmetryViolationError(
            f"inverse transform left |imag| up to {max_imag:.4g}, above "
            f"tolerance {IMAG_TOLERANCE:.4g}; coefficients are not "
            "Hermitian-symmetric"
        )
    logger.debug("inverse transform max |imag| = %.3e", max_imag)
    out = np.clip(real, 0.0, 255.0)
    if quantize:
        out = np.rint(out)
    return Image.from_array(out)


def _signed_freq(n: int) -> np.ndarray:
    """Signed frequency index for each DFT bin of an n-point axis."""
    idx = np.arange(n)
    return ((idx + n // 2) % n) - n // 2


def normalized_radius(height: int, width: int) -> np.ndarray:
    """Normalized distance of every (u, v) bin from the centered DC.

    The divisor sqrt((H/2)^2 + (W/2)^2) maps even-grid corners to exactly
    1.0; odd axes peak slightly below 1.
    """
    su = _signed_freq(height)[:, np.newaxis].astype(np.float64)
    sv = _signed_freq(width)[np.newaxis, :].astype(np.float64)
    r_max = np.sqrt((height / 2.0) ** 2 + (width / 2.0) ** 2)
    return np.sqrt(su * su + sv * sv) / r_max


@dataclass
class BandMask:
    """Radial annulus of frequency coordinates on a fixed grid.

    A coordinate (u, v) belongs to the band when
    alpha1 <= r(u, v) <= alpha2, both bounds inclusive.
    """

    height: int
    width: int
    alpha1: float
    alpha2: float
    inside: np.ndarray = field(repr=False)  # bool, shape (H, W)

    @property
    def members(self) -> frozenset[tuple[int, int]]:
        """All member coordinates as (u, v) tuples."""
        us, vs = np.nonzero(self.inside)
        return frozenset(zip(us.tolist(), vs.tolist()))

    @property
    def size(self) -> int:
        return int(self.inside.sum())

    def hermitian_half(self) -> tuple[np.ndarray, np.ndarray]:
        """Canonical representatives of the band's Hermitian pairs.

        Each unordered pair {(u, v), ((H-u) mod H, (W-v) mod W)} is
        represented by its lexicographically smaller member. Radius is
        invariant under the pairing, so both members always share band
        membership.

        Returns:
            (coords, self_paired): coords is (n_pairs, 2) sorted
            lexicographically; self_paired is a boolean vector marking
            coordinates that are their own partner.
        """
        us, vs = np.nonzero(self.inside)
        pu = (self.height - us) % self.height
        pv = (self.width - vs) % self.width
        keep = (us < pu) | ((us == pu) & (vs <= pv))
        coords = np.stack([us[keep], vs[keep]], axis=1)
        order = np.lexsort((coords[:, 1], coords[:, 0]))
        coords = coords[order]
        self_paired = (
            ((self.height - coords[:, 0]) % self.height == coords[:, 0])
            & ((self.width - coords[:, 1]) % self.width == coords[:, 1])
        )
        return coords, self_paired


def band_mask(height: int, width: int, alpha1: float, alpha2: float) -> BandMask:
    """Build the annulus alpha1 <= r <= alpha2 on an H x W grid.

    Raises:
        InvalidBandError: If the bounds are out of order or outside [0, 1].
    """
    if height < 1 or width < 1:
        raise InvalidBandError(f"grid must be at least 1x1, got {height}x{width}")
    if not (0.0 <= alpha1 <= alpha2 <= 1.0):
        raise InvalidBandError(
            f"band bounds must satisfy 0 <= alpha1 <= alpha2 <= 1, "
            f"got ({alpha1}, {alpha2})"
        )
    r = normalized_radius(height, width)
    inside = (r >= alpha1) & (r <= alpha2)
    return BandMask(height=height, width=width, alpha1=alpha1, alpha2=alpha2, inside=inside)


@dataclass
class Perturbation:
    """A sparse Hermitian-paired set of spectral offsets.

    Attributes:
        height, width, channels: Grid this perturbation targets.
        coords: (n, 2) integer array of perturbed (u, v) coordinates,
            including both members of every conjugate pair.
        values: (n, channels) complex offsets, aligned with coords.
        alpha1, alpha2: Band the coordinates were drawn from.
        sigma: Standard deviation of each real/imaginary noise component.
        seed: 64-bit seed the draw is a pure function of.
        pair_count: Number of unordered Hermitian pairs selected (a
            self-paired coordinate counts as one pair).
    """

    height: int
    width: int
    channels: int
    coords: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    alpha1: float
    alpha2: float
    sigma: float
    seed: int
    pair_count: int

    def entries(self):
        """Yield (channel, u, v, value) for every stored coefficient."""
        for row in range(self.coords.shape[0]):
            u, v = int(self.coords[row, 0]), int(self.coords[row, 1])
            for c in range(self.channels):
                yield c, u, v, complex(self.values[row, c])

    def expected_spectral_energy(self) -> float:
        """Analytic expected total added spectral energy, all channels.

        Derived via Parseval from the sampling law: a regular conjugate
        pair contributes 2 coordinates with E|value|^2 = 2 sigma^2 each; a
        self-paired coordinate contributes sigma^2 (real component only).
        """
        n_total = self.coords.shape[0]
        n_self = int(
            (((self.height - self.coords[:, 0]) % self.height == self.coords[:, 0])
             & ((self.width - self.coords[:, 1]) % self.width == self.coords[:, 1])).sum()
        )
        n_regular = n_total - n_self
        return self.channels * (n_regular * 2.0 + n_self * 1.0) * self.sigma**2

    def expected_pixel_mse(self) -> float:
        """Analytic expected per-pixel MSE added by one application.

        Parseval for the unnormalized transform gives
        sum |x|^2 = (1/(H*W)) sum |X|^2, so the per-channel pixel MSE is
        the per-channel spectral energy divided by (H*W)^2. Quantization
        to whole 8-bit levels adds roughly 1/12 on top; that term is not
        included here.
        """
        per_channel = self.expected_spectral_energy() / self.channels
        return per_channel / float(self.height * self.width) ** 2


def sample_perturbation(
    mask: BandMask,
    rho: float,
    sigma: float,
    channels: int,
    seed: int,
) -> Perturbation:
    """Draw a random sparse perturbation inside a band.

    min(floor(rho * H * W), number of Hermitian pairs in the band)
    unordered pairs are chosen uniformly without replacement. Every chosen
    coordinate receives, per channel independently, complex Gaussian noise
    with independent real and imaginary components of standard deviation
    sigma; the conjugate partner mirrors the value. The same coordinates
    are used for all channels. The draw is a pure function of the seed.

    Raises:
        EmptyBandError: If the mask selects no coordinates.
        ValueError: If rho or sigma is not positive, or channels invalid.
    """
    if mask.size == 0:
        raise EmptyBandError(
            f"band ({mask.alpha1}, {mask.alpha2}) selects no coordinates on "
            f"a {mask.height}x{mask.width} grid"
        )
    if rho <= 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if channels not in (1, 3):
        raise ValueError(f"channels must be 1 or 3, got {channels}")

    half_coords, self_paired = mask.hermitian_half()
    n_pairs = half_coords.shape[0]
    k = min(int(np.floor(rho * mask.height * mask.width)), n_pairs)

    rng = np.random.default_rng(seed & ((1 << 64) - 1))
    chosen_idx = np.sort(rng.choice(n_pairs, size=k, replace=False))
    chosen = half_coords[chosen_idx]
    chosen_self = self_paired[chosen_idx]

    draws = rng.normal(0.0, sigma, size=(k, channels, 2))
    values = draws[:, :, 0] + 1j * draws[:, :, 1]
    values[chosen_self, :] = draws[chosen_self, :, 0]  # self-paired stay real

    regular = ~chosen_self
    partner = np.stack(
        [
            (mask.height - chosen[regular, 0]) % mask.height,
            (mask.width - chosen[regular, 1]) % mask.width,
        ],
        axis=1,
    )
    coords = np.concatenate([chosen, partner], axis=0)
    all_values = np.concatenate([values, np.conj(values[regular])], axis=0)

    return Perturbation(
        height=mask.height,
        width=mask.width,
        channels=channels,
        coords=coords,
        values=all_values,
        alpha1=mask.alpha1,
        alpha2=mask.alpha2,
        sigma=sigma,
        seed=seed,
        pair_count=k,
    )


def apply_perturbation(img: Image, delta: Perturbation) -> Image:
    """Add a spectral perturbation to an image and return the result.

    The image is transformed, the offsets are added to its coefficients,
    and the inverse transform is taken with real part, clamp to [0, 255],
    and rounding to whole 8-bit levels applied. The input image is never
    modified.

    Raises:
        DimensionMismatchError: If image and perturbation grids disagree.
    """
    if (img.height, img.width, img.channels) != (delta.height, delta.width, delta.channels):
        raise DimensionMismatchError(
            f"image is {img.height}x{img.width}x{img.channels} but perturbation "
            f"targets {delta.height}x{delta.width}x{delta.channels}"
        )
    coeffs = forward_raw(img.pixels)
    if delta.coords.shape[0]:
        coeffs[delta.coords[:, 0], delta.coords[:, 1], :] += delta.values
    return inverse_spectrum(Spectrum(coefficients=coeffs), quantize=True)


def radial_power_spectrum(img: Image, nbins: int = 64) -> np.ndarray:
    """Azimuthally averaged log-power profile of an image.

    The spectrum is averaged over channels (complex mean), centered, and
    log(1 + |coefficient|^2) is averaged within nbins equal-width bins of
    normalized radius covering [0, 1]. Bins containing no coordinates
    yield 0.

    Returns:
        Array of nbins bin means.
    """
    if nbins < 1:
        raise ValueError(f"nbins must be positive, got {nbins}")
    mean_spec = forward_raw(img.pixels).mean(axis=2)
    power = np.log1p(np.abs(mean_spec) ** 2)
    r = normalized_radius(img.height, img.width)
    bins = np.minimum((r * nbins).astype(np.int64), nbins - 1)
    sums = np.bincount(bins.ravel(), weights=power.ravel(), minlength=nbins)
    counts = np.bincount(bins.ravel(), minlength=nbins)
    profile = np.zeros(nbins, dtype=np.float64)
    nonzero = counts > 0
    profile[nonzero] = sums[nonzero] / counts[nonzero]
    return profile


def psnr(a: Image, b: Image) -> float:
    """Peak signal-to-noise ratio in dB on the 255 scale.

    Returns +inf for identical images.

    Raises:
        DimensionMismatchError: If the two images disagree in shape.
    """
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatchError(
            f"cannot compare {a.pixels.shape} against {b.pixels.shape}"
        )
    mse = float(np.mean((a.pixels - b.pixels) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(255.0**2 / mse))


def diff_maps(a: Image, b: Image) -> tuple[np.ndarray, np.ndarray]:
    """Pixel- and frequency-domain difference maps between two images.

    Returns:
        (pixel_map, freq_map):
        pixel_map is a binary uint8 (H, W) array marking pixels whose
        per-pixel L2 difference across channels is nonzero. freq_map is a
        float (H, W) array holding log(1 + m) of the channel-averaged
        spectral difference magnitude m, centered for display.

    Raises:
        DimensionMismatchError: If the two images disagree in shape.
    """
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatchError(
            f"cannot diff {a.pixels.shape} against {b.pixels.shape}"
        )
    pixel_l2 = np.sqrt(((a.pixels - b.pixels) ** 2).sum(axis=2))
    pixel_map = (pixel_l2 > 0.0).astype(np.uint8)

    spec_diff = np.abs(forward_raw(a.pixels) - forward_raw(b.pixels)).mean(axis=2)
    freq_map = np.log1p(np.fft.fftshift(spec_diff))
    return pixel_map, freq_map
