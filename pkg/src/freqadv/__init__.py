"""freqadv: sparse spectral perturbation attacks on vision-language oracles.

The toolkit perturbs a handful of Hermitian-paired Fourier coefficients
inside a narrow radial band, keeping images visually intact, and greedily
searches those perturbations against a black-box oracle to flip realism
judgments or push captions away from their original meaning.
"""

__version__ = "0.1.0"

from .engine import (
    AttackConfig,
    AttackResult,
    HIGH_BAND,
    MID_BAND,
    Task,
    realism_goal,
    run_attack,
)
from .errors import FreqAdvError
from .image import Image
from .metrics import CaptionPair, caption_stats, realism_stats, token_count
from .spectral import (
    BandMask,
    Perturbation,
    Spectrum,
    apply_perturbation,
    band_mask,
    diff_maps,
    forward_spectrum,
    inverse_spectrum,
    psnr,
    radial_power_spectrum,
    sample_perturbation,
)

__all__ = [
    "__version__",
    "AttackConfig",
    "AttackResult",
    "BandMask",
    "CaptionPair",
    "FreqAdvError",
    "HIGH_BAND",
    "Image",
    "MID_BAND",
    "Perturbation",
    "Spectrum",
    "Task",
    "apply_perturbation",
    "band_mask",
    "caption_stats",
    "diff_maps",
    "forward_spectrum",
    "inverse_spectrum",
    "psnr",
    "radial_power_spectrum",
    "realism_goal",
    "realism_stats",
    "run_attack",
    "sample_perturbation",
    "token_count",
]
