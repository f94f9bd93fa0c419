"""Aggregate statistics over realism scores and caption pairs.

All standard deviations are population standard deviations (divide by n,
not n - 1), matching how the summary tables are reported.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInputError


def token_count(text: str) -> int:
    """Number of whitespace-delimited runs in a string."""
    return len(text.split())


@dataclass(frozen=True)
class RealismStats:
    """Distribution summary of one set of 0-10 realism scores.

    frac_below / frac_mid / frac_above partition the set by the tau1/tau2
    thresholds: score < tau1, tau1 <= score <= tau2, score > tau2.
    frac_real applies the binary reading (score > 5 means "judged real").
    """

    n: int
    mean: float
    std: float
    frac_below: float
    frac_mid: float
    frac_above: float
    frac_real: float
    tau1: int
    tau2: int


def realism_stats(scores: Sequence[int], tau1: int = 4, tau2: int = 6) -> RealismStats:
    """Summarize integer realism scores.

    Raises:
        EmptyInputError: On an empty score list.
        ValueError: On scores outside [0, 10] or bad thresholds.
    """
    if len(scores) == 0:
        raise EmptyInputError("cannot summarize an empty score list")
    if not (0 <= tau1 <= tau2 <= 10):
        raise ValueError(f"thresholds must satisfy 0 <= tau1 <= tau2 <= 10, got ({tau1}, {tau2})")
    arr = np.asarray(scores, dtype=np.float64)
    if arr.min() < 0 or arr.max() > 10:
        raise ValueError(
            f"scores must lie in [0, 10], got range [{arr.min():g}, {arr.max():g}]"
        )
    n = arr.size
    return RealismStats(
        n=n,
        mean=float(arr.mean()),
        std=float(arr.std()),  # population std
        frac_below=float((arr < tau1).sum() / n),
        frac_mid=float(((arr >= tau1) & (arr <= tau2)).sum() / n),
        frac_above=float((arr > tau2).sum() / n),
        frac_real=float((arr > 5).sum() / n),
        tau1=tau1,
        tau2=tau2,
    )


@dataclass(frozen=True)
class CaptionPair:
    """One original/perturbed caption pairing with its cosine similarity."""

    original: str
    perturbed: str
    theta_cos: float


@dataclass(frozen=True)
class CaptionStats:
    """Verbosity and semantic-drift summary over caption pairs.

    drift is 1 - theta_cos, so it lives in [0, 2]: 0 for identical
    embeddings, above 1 once embeddings point away from each other.
    mean_tokens counts the original captions.
    """

    n: int
    delta_length_mean: float
    delta_length_std: float
    mean_tokens: float
    delta_tokens_mean: float
    delta_tokens_std: float
    drift_mean: float
    drift_std: float


def caption_stats(pairs: Iterable[CaptionPair]) -> CaptionStats:
    """Summarize caption drift and verbosity changes.

    Raises:
        EmptyInputError: On an empty pair list.
        ValueError: On a cosine outside [-1, 1].
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyInputError("cannot summarize an empty caption pair list")
    for pair in pairs:
        if not (-1.0 - 1e-9 <= pair.theta_cos <= 1.0 + 1e-9):
            raise ValueError(f"cosine similarity out of range: {pair.theta_cos}")
    delta_len = np.asarray(
        [len(p.perturbed) - len(p.original) for p in pairs], dtype=np.float64
    )
    delta_tok = np.asarray(
        [token_count(p.perturbed) - token_count(p.original) for p in pairs],
        dtype=np.float64,
    )
    orig_tok = np.asarray([token_count(p.original) for p in pairs], dtype=np.float64)
    drift = 1.0 - np.asarray([p.theta_cos for p in pairs], dtype=np.float64)
    return CaptionStats(
        n=len(pairs),
        delta_length_mean=float(delta_len.mean()),
        delta_length_std=float(delta_len.std()),
        mean_tokens=float(orig_tok.mean()),
        delta_tokens_mean=float(delta_tok.mean()),
        delta_tokens_std=float(delta_tok.std()),
        drift_mean=float(drift.mean()),
        drift_std=float(drift.std()),
    )
