"""Greedy black-box search over sparse spectral perturbations.

Each step draws a batch of candidate perturbations, applies every one to
the current image, asks the oracle about each result, and keeps the
candidate with the best goal measure only if it strictly improves on the
incumbent. A step that improves nothing still consumes one of the
max_steps iterations; the next step simply draws fresh candidates from
new seeds.

Candidate seeds are derive_seed(config.seed, step, index) (a splitmix64
chain), so results are reproducible regardless of evaluation order or
worker count.
"""
from __future__ import annotations

import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, OracleError
from .image import Image
from .oracle import Oracle, cosine_similarity, parse_score
from .spectral import apply_perturbation, band_mask, psnr, sample_perturbation
from .util import derive_seed

logger = logging.getLogger(__name__)

HIGH_BAND = (0.85, 1.0)
MID_BAND = (0.49, 0.51)

DEFAULT_REALISM_QUERY = (
    "On a scale from 0 to 10, where 0 means certainly synthetic and 10 "
    "means certainly a real photograph, how real does this image look? "
    "Answer with a single integer."
)
DEFAULT_CAPTION_QUERY = "Describe this image in one sentence."


class Task(str, Enum):
    REALISM = "realism"
    CAPTION = "caption"


@dataclass(frozen=True)
class AttackConfig:
    """Semantic parameters of one attack run.

    sigma and the pair budget are recomputed from each image's own
    dimensions: sigma = sigma_factor * H * W and the number of Hermitian
    pairs is min(floor(rho * H * W), pairs available in the band).
    """

    task: Task
    band: tuple[float, float]
    n_candidates: int
    rho: float = 0.1
    sigma_factor: float = 0.025
    max_steps: int = 5
    tau1: int = 4
    tau2: int = 6
    tau_sim: float = 0.5
    seed: int = 0
    psnr_floor: float = 28.0
    realism_query: str = DEFAULT_REALISM_QUERY
    caption_query: str = DEFAULT_CAPTION_QUERY

    def __post_init__(self) -> None:
        if not (0.0 <= self.band[0] <= self.band[1] <= 1.0):
            raise ConfigError(f"band bounds out of order or range: {self.band}")
        if self.n_candidates < 1:
            raise ConfigError(f"n_candidates must be positive, got {self.n_candidates}")
        if self.rho <= 0.0:
            raise ConfigError(f"rho must be positive, got {self.rho}")
        if self.sigma_factor <= 0.0:
            raise ConfigError(f"sigma_factor must be positive, got {self.sigma_factor}")
        if self.max_steps < 0:
            raise ConfigError(f"max_steps must be nonnegative, got {self.max_steps}")
        if not (0 <= self.tau1 <= self.tau2 <= 10):
            raise ConfigError(
                f"score thresholds must satisfy 0 <= tau1 <= tau2 <= 10, "
                f"got ({self.tau1}, {self.tau2})"
            )
        if not (0.0 <= self.tau_sim <= 1.0):
            raise ConfigError(f"tau_sim must lie in [0, 1], got {self.tau_sim}")
        if self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed}")

    @classmethod
    def for_realism(cls, **overrides: Any) -> "AttackConfig":
        defaults: dict[str, Any] = {"task": Task.REALISM, "band": HIGH_BAND, "n_candidates": 20}
        defaults.update(overrides)
        return cls(**defaults)

    @classmethod
    def for_caption(cls, **overrides: Any) -> "AttackConfig":
        defaults: dict[str, Any] = {"task": Task.CAPTION, "band": MID_BAND, "n_candidates": 10}
        defaults.update(overrides)
        return cls(**defaults)

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "AttackConfig":
        data = dict(data)
        try:
            task = Task(data.pop("task"))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"config must name a valid task: {exc}") from exc
        if "band" in data:
            band = data["band"]
            if not (isinstance(band, (list, tuple)) and len(band) == 2):
                raise ConfigError(f"band must be a two-element sequence, got {band!r}")
            data["band"] = (float(band[0]), float(band[1]))
        factory = cls.for_realism if task is Task.REALISM else cls.for_caption
        try:
            return factory(**data)
        except TypeError as exc:
            raise ConfigError(f"unknown config field: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "AttackConfig":
        """Load a config from a TOML or JSON document (by file suffix)."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() == ".toml":
            if sys.version_info >= (3, 11):
                import tomllib
            else:
                import tomli as tomllib
            try:
                data = tomllib.loads(text)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config root must be a table/object, got {type(data).__name__}")
        return cls.from_mapping(data)

    def to_canonical_dict(self) -> dict[str, Any]:
        """Stable mapping used for serialization and run addressing."""
        return {
            "task": self.task.value,
            "band": [self.band[0], self.band[1]],
            "n_candidates": self.n_candidates,
            "rho": self.rho,
            "sigma_factor": self.sigma_factor,
            "max_steps": self.max_steps,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "tau_sim": self.tau_sim,
            "seed": self.seed,
            "psnr_floor": self.psnr_floor,
            "realism_query": self.realism_query,
            "caption_query": self.caption_query,
        }


class GoalSide(str, Enum):
    GENERATED = "generated"  # push the score up into the real region
    REAL = "real"  # push the score down into the synthetic region


@dataclass(frozen=True)
class RealismGoal:
    """Target score for a realism flip.

    A ground truth at or below 5 (labelled synthetic) aims for tau2 + 1;
    above 5 (labelled real) aims for tau1 - 1. Targets are clamped to the
    0-10 scale.
    """

    side: GoalSide
    target: int

    def measure(self, score: int) -> float:
        return -abs(score - self.target)

    def flipped(self, score: int, tau1: int, tau2: int) -> bool:
        if self.side is GoalSide.GENERATED:
            return score >= tau2 + 1
        return score <= tau1 - 1


def realism_goal(y_gt: int, tau1: int = 4, tau2: int = 6) -> RealismGoal:
    """Build the realism goal for a ground-truth score.

    Raises:
        ConfigError: If y_gt is outside [0, 10].
    """
    if not (0 <= y_gt <= 10):
        raise ConfigError(f"ground-truth score must lie in [0, 10], got {y_gt}")
    if y_gt <= 5:
        return RealismGoal(side=GoalSide.GENERATED, target=min(10, tau2 + 1))
    return RealismGoal(side=GoalSide.REAL, target=max(0, tau1 - 1))


@dataclass(frozen=True)
class CaptionGoal:
    """Drive candidate captions away from the baseline embedding."""

    baseline_caption: str
    baseline_embedding: np.ndarray = field(repr=False)
    tau_sim: float

    def measure(self, embedding: np.ndarray) -> float:
        return -cosine_similarity(self.baseline_embedding, embedding)

    def drifted(self, measure: float) -> bool:
        return -measure < self.tau_sim


@dataclass
class StepLog:
    """One row of the per-step attack log."""

    step: int
    chosen_index: int
    chosen_measure: float
    adopted: bool
    raw_reply: str
    measure_after: float
    queries_after: int
    wall_time_s: float


@dataclass
class AttackState:
    """Mutable cursor of a running attack."""

    image: Image
    png: bytes
    step: int
    measure: float
    response: str  # current incumbent's raw reply (score text or caption)
    score: int | None
    queries: int
    embed_queries: int
    goal: RealismGoal | CaptionGoal
    log: list[StepLog] = field(default_factory=list)


@dataclass
class AttackResult:
    """Outcome of run_attack."""

    task: Task
    success: bool
    steps: list[StepLog]
    total_queries: int
    embed_queries: int
    initial_response: str
    final_response: str
    initial_score: int | None
    final_score: int | None
    final_cosine: float | None
    psnr_db: float
    low_psnr: bool
    error: str | None
    final_image: Image
    seed: int


def _evaluate_candidate(
    state: AttackState, cfg: AttackConfig, oracle: Oracle, mask, sigma: float, index: int
) -> tuple[int, float, str, Image, int | None]:
    seed = derive_seed(cfg.seed, state.step, index)
    delta = sample_perturbation(mask, cfg.rho, sigma, state.image.channels, seed)
    candidate = apply_perturbation(state.image, delta)
    png = candidate.to_png_bytes()
    if cfg.task is Task.REALISM:
        raw = oracle.realism_raw(png, cfg.realism_query)
        score = parse_score(raw)
        assert isinstance(state.goal, RealismGoal)
        return index, float(state.goal.measure(score)), raw, candidate, score
    raw = oracle.caption(png, cfg.caption_query)
    embedding = oracle.embed(raw)
    assert isinstance(state.goal, CaptionGoal)
    return index, float(state.goal.measure(embedding)), raw, candidate, None


def attack_step(
    state: AttackState,
    cfg: AttackConfig,
    oracle: Oracle,
    *,
    candidates_parallel: int = 1,
) -> AttackState:
    """Evaluate one batch of candidates and adopt the best improving one.

    The batch winner is the highest goal measure, ties broken toward the
    lowest candidate index. The incumbent is replaced only on strict
    improvement; either way the step counter advances and every candidate
    consumed exactly one oracle query (plus one embed for caption runs).
    """
    t0 = time.perf_counter()
    mask = band_mask(state.image.height, state.image.width, cfg.band[0], cfg.band[1])
    sigma = cfg.sigma_factor * state.image.height * state.image.width

    indices = range(cfg.n_candidates)
    if candidates_parallel > 1:
        with ThreadPoolExecutor(max_workers=candidates_parallel) as pool:
            results = list(
                pool.map(
                    lambda i: _evaluate_candidate(state, cfg, oracle, mask, sigma, i),
                    indices,
                )
            )
    else:
        results = [_evaluate_candidate(state, cfg, oracle, mask, sigma, i) for i in indices]

    best = None
    for entry in sorted(results, key=lambda r: r[0]):
        if best is None or entry[1] > best[1]:
            best = entry
    assert best is not None
    index, measure, raw, candidate, score = best

    adopted = bool(measure > state.measure)
    new_queries = state.queries + cfg.n_candidates
    new_embeds = state.embed_queries + (cfg.n_candidates if cfg.task is Task.CAPTION else 0)
    row = StepLog(
        step=state.step,
        chosen_index=index,
        chosen_measure=measure,
        adopted=adopted,
        raw_reply=raw,
        measure_after=measure if adopted else state.measure,
        queries_after=new_queries,
        wall_time_s=time.perf_counter() - t0,
    )
    logger.debug(
        "step %d: candidate %d measure %.6f (%s)",
        state.step, index, measure, "adopted" if adopted else "rejected",
    )
    return AttackState(
        image=candidate if adopted else state.image,
        png=candidate.to_png_bytes() if adopted else state.png,
        step=state.step + 1,
        measure=measure if adopted else state.measure,
        response=raw if adopted else state.response,
        score=score if adopted else state.score,
        queries=new_queries,
        embed_queries=new_embeds,
        goal=state.goal,
        log=state.log + [row],
    )


def _succeeded(state: AttackState, cfg: AttackConfig) -> bool:
    if cfg.task is Task.REALISM:
        assert isinstance(state.goal, RealismGoal) and state.score is not None
        return state.goal.flipped(state.score, cfg.tau1, cfg.tau2)
    assert isinstance(state.goal, CaptionGoal)
    return state.goal.drifted(state.measure)


def run_attack(
    img: Image,
    cfg: AttackConfig,
    oracle: Oracle,
    *,
    y_gt: int | None = None,
    candidates_parallel: int = 1,
) -> AttackResult:
    """Run the full greedy attack on one image.

    For realism runs y_gt (the dataset's ground truth on the 0-10 scale)
    chooses which side of the decision boundary to push toward. For
    caption runs the baseline caption and its embedding come from one
    initial oracle query.

    The total oracle query count is exactly 1 + (steps taken) *
    n_candidates; a run that stops early because the goal is reached
    stops issuing queries immediately.
    """
    original = img
    try:
        if cfg.task is Task.REALISM:
            if y_gt is None:
                raise ConfigError("realism attack requires y_gt")
            goal = realism_goal(y_gt, cfg.tau1, cfg.tau2)
            png = img.to_png_bytes()
            raw = oracle.realism_raw(png, cfg.realism_query)
            score = parse_score(raw)
            state = AttackState(
                image=img, png=png, step=0, measure=goal.measure(score),
                response=raw, score=score, queries=1, embed_queries=0, goal=goal,
            )
        else:
            png = img.to_png_bytes()
            caption = oracle.caption(png, cfg.caption_query)
            embedding = oracle.embed(caption)
            goal = CaptionGoal(
                baseline_caption=caption, baseline_embedding=embedding, tau_sim=cfg.tau_sim
            )
            state = AttackState(
                image=img, png=png, step=0, measure=goal.measure(embedding),
                response=caption, score=None, queries=1, embed_queries=1, goal=goal,
            )
    except OracleError as exc:
        logger.warning("baseline query failed: %s", exc)
        return AttackResult(
            task=cfg.task, success=False, steps=[], total_queries=0, embed_queries=0,
            initial_response="", final_response="", initial_score=None, final_score=None,
            final_cosine=None, psnr_db=float("inf"), low_psnr=False,
            error=f"baseline query failed: {exc}", final_image=img, seed=cfg.seed,
        )

    initial_response = state.response
    initial_score = state.score
    error: str | None = None
    try:
        while state.step < cfg.max_steps and not _succeeded(state, cfg):
            state = attack_step(state, cfg, oracle, candidates_parallel=candidates_parallel)
    except OracleError as exc:
        logger.warning("attack stopped at step %d: %s", state.step, exc)
        error = f"oracle failure at step {state.step}: {exc}"

    success = error is None and bool(_succeeded(state, cfg))
    quality = psnr(original, state.image)
    final_cosine = None
    if cfg.task is Task.CAPTION:
        final_cosine = float(-state.measure)
    return AttackResult(
        task=cfg.task,
        success=success,
        steps=state.log,
        total_queries=state.queries,
        embed_queries=state.embed_queries,
        initial_response=initial_response,
        final_response=state.response,
        initial_score=initial_score,
        final_score=state.score,
        final_cosine=final_cosine,
        psnr_db=quality,
        low_psnr=quality < cfg.psnr_floor,
        error=error,
        final_image=state.image,
        seed=cfg.seed,
    )


def result_to_summary(
    result: AttackResult, cfg: AttackConfig, *, image_ref: str | None = None,
    gt: str | None = None, tag: str | None = None,
) -> dict[str, Any]:
    """Deterministic JSON-ready summary of a run.

    Wall-clock timings are deliberately excluded; they live in the step
    log. Two runs with the same image, config, and oracle produce
    byte-identical serializations of this mapping.
    """
    psnr_value: float | str = result.psnr_db if np.isfinite(result.psnr_db) else "inf"
    return {
        "task": result.task.value,
        "image": image_ref,
        "gt": gt,
        "tag": tag,
        "config": cfg.to_canonical_dict(),
        "success": result.success,
        "error": result.error,
        "total_queries": result.total_queries,
        "embed_queries": result.embed_queries,
        "initial_response": result.initial_response,
        "final_response": result.final_response,
        "initial_score": result.initial_score,
        "final_score": result.final_score,
        "final_cosine": result.final_cosine,
        "psnr_db": psnr_value,
        "low_psnr": result.low_psnr,
        "steps": [
            {
                "step": row.step,
                "chosen_index": row.chosen_index,
                "chosen_measure": row.chosen_measure,
                "adopted": row.adopted,
                "raw_reply": row.raw_reply,
                "measure_after": row.measure_after,
                "queries_after": row.queries_after,
            }
            for row in result.steps
        ],
    }


__all__ = [
    "AttackConfig",
    "AttackResult",
    "AttackState",
    "CaptionGoal",
    "GoalSide",
    "RealismGoal",
    "StepLog",
    "Task",
    "HIGH_BAND",
    "MID_BAND",
    "attack_step",
    "realism_goal",
    "result_to_summary",
    "run_attack",
]
