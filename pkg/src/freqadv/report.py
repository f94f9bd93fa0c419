"""Report generation: summary tables as CSV/JSON plus rendered figures.

The analyze path recomputes aggregate statistics from persisted run
summaries; the report path additionally renders matplotlib figures next
to the delimited output.
"""
from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import EmptyInputError
from .image import Image
from .metrics import CaptionPair, caption_stats, realism_stats
from .spectral import diff_maps, radial_power_spectrum

logger = logging.getLogger(__name__)

REALISM_CSV_COLUMNS = [
    "dataset", "type", "n",
    "mean_orig", "std_orig", "mean_pert", "std_pert", "delta_mean",
    "frac_below_tau1_orig", "frac_mid_orig", "frac_above_tau2_orig",
    "frac_below_tau1_pert", "frac_mid_pert", "frac_above_tau2_pert",
    "binary_real_orig", "binary_real_pert",
    "flip_rate", "mean_queries", "mean_psnr_db",
]

CAPTION_CSV_COLUMNS = [
    "dataset", "type", "n",
    "delta_length_mean", "delta_length_std",
    "mean_tokens", "delta_tokens_mean", "delta_tokens_std",
    "drift_mean", "drift_std",
    "success_rate", "mean_queries",
]


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def group_summaries(summaries: list[dict]) -> dict[tuple[str, str, str], list[dict]]:
    """Group run summaries by (tag, gt, task)."""
    groups: dict[tuple[str, str, str], list[dict]] = defaultdict(list)
    for summary in summaries:
        key = (summary.get("tag") or "untagged", summary.get("gt") or "unknown",
               summary.get("task") or "unknown")
        groups[key].append(summary)
    return dict(groups)


def realism_rows(
    summaries: list[dict], tau1: int = 4, tau2: int = 6
) -> list[dict[str, str]]:
    """Aggregate realism runs into one CSV row per (tag, gt) group."""
    rows = []
    for (tag, gt, task), group in sorted(group_summaries(summaries).items()):
        if task != "realism":
            continue
        scored = [s for s in group
                  if s.get("initial_score") is not None and s.get("final_score") is not None]
        if not scored:
            continue
        orig = realism_stats([s["initial_score"] for s in scored], tau1, tau2)
        pert = realism_stats([s["final_score"] for s in scored], tau1, tau2)
        flips = sum(1 for s in scored if s.get("success"))
        queries = np.mean([s.get("total_queries", 0) for s in scored])
        psnrs = [s["psnr_db"] for s in scored if isinstance(s.get("psnr_db"), (int, float))]
        rows.append({
            "dataset": tag,
            "type": gt,
            "n": str(orig.n),
            "mean_orig": _fmt(orig.mean), "std_orig": _fmt(orig.std),
            "mean_pert": _fmt(pert.mean), "std_pert": _fmt(pert.std),
            "delta_mean": _fmt(pert.mean - orig.mean),
            "frac_below_tau1_orig": _fmt(orig.frac_below),
            "frac_mid_orig": _fmt(orig.frac_mid),
            "frac_above_tau2_orig": _fmt(orig.frac_above),
            "frac_below_tau1_pert": _fmt(pert.frac_below),
            "frac_mid_pert": _fmt(pert.frac_mid),
            "frac_above_tau2_pert": _fmt(pert.frac_above),
            "binary_real_orig": _fmt(orig.frac_real),
            "binary_real_pert": _fmt(pert.frac_real),
            "flip_rate": _fmt(flips / orig.n),
            "mean_queries": _fmt(float(queries)),
            "mean_psnr_db": _fmt(float(np.mean(psnrs))) if psnrs else "inf",
        })
    return rows


def caption_rows(summaries: list[dict]) -> list[dict[str, str]]:
    """Aggregate caption runs into one CSV row per (tag, gt) group."""
    rows = []
    for (tag, gt, task), group in sorted(group_summaries(summaries).items()):
        if task != "caption":
            continue
        pairs = [
            CaptionPair(
                original=s["initial_response"],
                perturbed=s["final_response"],
                theta_cos=s["final_cosine"],
            )
            for s in group
            if isinstance(s.get("final_cosine"), (int, float))
        ]
        if not pairs:
            continue
        stats = caption_stats(pairs)
        successes = sum(1 for s in group if s.get("success"))
        queries = np.mean([s.get("total_queries", 0) for s in group])
        rows.append({
            "dataset": tag,
            "type": gt,
            "n": str(stats.n),
            "delta_length_mean": _fmt(stats.delta_length_mean),
            "delta_length_std": _fmt(stats.delta_length_std),
            "mean_tokens": _fmt(stats.mean_tokens),
            "delta_tokens_mean": _fmt(stats.delta_tokens_mean),
            "delta_tokens_std": _fmt(stats.delta_tokens_std),
            "drift_mean": _fmt(stats.drift_mean),
            "drift_std": _fmt(stats.drift_std),
            "success_rate": _fmt(successes / len(group)),
            "mean_queries": _fmt(float(queries)),
        })
    return rows


def write_csv(path: Path, columns: list[str], rows: list[dict[str, str]]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def analyze_runs(
    summaries: list[dict], out_dir: Path, tau1: int = 4, tau2: int = 6
) -> dict:
    """Write realism/caption CSV tables plus a JSON digest. Returns the digest.

    Raises:
        EmptyInputError: If no summaries produced any table row.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    r_rows = realism_rows(summaries, tau1, tau2)
    c_rows = caption_rows(summaries)
    if not r_rows and not c_rows:
        raise EmptyInputError("no usable run summaries found")
    if r_rows:
        write_csv(out_dir / "realism_report.csv", REALISM_CSV_COLUMNS, r_rows)
    if c_rows:
        write_csv(out_dir / "caption_report.csv", CAPTION_CSV_COLUMNS, c_rows)
    digest = {
        "n_runs": len(summaries),
        "tau1": tau1,
        "tau2": tau2,
        "realism": r_rows,
        "caption": c_rows,
    }
    (out_dir / "analysis.json").write_text(
        json.dumps(digest, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )
    return digest


def binary_map_runs(pixel_map: np.ndarray) -> list[tuple[int, int, int]]:
    """Run-length encode a binary map: (row, col_start, col_end) inclusive."""
    runs = []
    arr = np.asarray(pixel_map) != 0
    for row in range(arr.shape[0]):
        cols = np.flatnonzero(arr[row])
        if cols.size == 0:
            continue
        breaks = np.flatnonzero(np.diff(cols) > 1)
        starts = np.concatenate([[0], breaks + 1])
        ends = np.concatenate([breaks, [cols.size - 1]])
        for s, e in zip(starts, ends):
            runs.append((row, int(cols[s]), int(cols[e])))
    return runs


def write_pixel_runs_csv(path: Path, pixel_map: np.ndarray) -> None:
    """Export a binary difference map as one CSV row per pixel run."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "col_start", "col_end"])
        for row, c0, c1 in binary_map_runs(pixel_map):
            writer.writerow([row, c0, c1])


def write_profiles_csv(path: Path, profiles: dict[str, np.ndarray]) -> None:
    """Export named radial profiles side by side, one row per bin."""
    names = list(profiles)
    nbins = len(next(iter(profiles.values())))
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin", "radius_center"] + [f"log_power_{n}" for n in names])
        for i in range(nbins):
            center = (i + 0.5) / nbins
            writer.writerow(
                [i, f"{center:.6f}"] + [f"{profiles[n][i]:.10g}" for n in names]
            )


def spectrum_figure(
    a: Image, b: Image, out_path: Path, *, nbins: int = 64,
    label_a: str = "original", label_b: str = "perturbed",
) -> None:
    """Render radial profiles and difference maps for an image pair."""
    profile_a = radial_power_spectrum(a, nbins)
    profile_b = radial_power_spectrum(b, nbins)
    pixel_map, freq_map = diff_maps(a, b)
    centers = (np.arange(nbins) + 0.5) / nbins

    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    axes[0].plot(centers, profile_a, label=label_a)
    axes[0].plot(centers, profile_b, label=label_b, linestyle="--")
    axes[0].set_xlabel("normalized radius")
    axes[0].set_ylabel("azimuthal mean log(1 + power)")
    axes[0].set_title("radial power profile")
    axes[0].legend()

    axes[1].imshow(pixel_map, cmap="gray", interpolation="nearest")
    axes[1].set_title("changed pixels")
    axes[1].axis("off")

    im = axes[2].imshow(freq_map, cmap="magma", interpolation="nearest")
    axes[2].set_title("spectral difference (log)")
    axes[2].axis("off")
    fig.colorbar(im, ax=axes[2], fraction=0.046)

    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def score_histogram_figure(summaries: list[dict], out_path: Path) -> bool:
    """Histogram of initial vs final realism scores. Returns False if none."""
    initial = [s["initial_score"] for s in summaries
               if s.get("task") == "realism" and s.get("initial_score") is not None]
    final = [s["final_score"] for s in summaries
             if s.get("task") == "realism" and s.get("final_score") is not None]
    if not initial:
        return False
    edges = np.arange(-0.5, 11.5, 1.0)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(initial, bins=edges, alpha=0.6, label="original")
    ax.hist(final, bins=edges, alpha=0.6, label="perturbed")
    ax.set_xlabel("realism score")
    ax.set_ylabel("count")
    ax.set_title("score distribution before and after attack")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return True


def drift_histogram_figure(summaries: list[dict], out_path: Path) -> bool:
    """Histogram of caption drift (1 - cosine). Returns False if none."""
    drifts = [1.0 - s["final_cosine"] for s in summaries
              if s.get("task") == "caption" and isinstance(s.get("final_cosine"), (int, float))]
    if not drifts:
        return False
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(drifts, bins=20)
    ax.set_xlabel("semantic drift (1 - cosine)")
    ax.set_ylabel("count")
    ax.set_title("caption drift distribution")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return True


def render_report(
    summaries: list[dict], runs_dir: Path, out_dir: Path,
    *, tau1: int = 4, tau2: int = 6, max_pairs: int = 4,
) -> dict:
    """Full report: CSV tables, JSON digest, and figures.

    Figures cover aggregate score/drift distributions plus per-pair
    spectral comparisons for up to max_pairs persisted runs.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = analyze_runs(summaries, out_dir, tau1, tau2)
    score_histogram_figure(summaries, out_dir / "score_distribution.png")
    drift_histogram_figure(summaries, out_dir / "caption_drift.png")

    rendered = 0
    for run_dir in sorted(Path(runs_dir).iterdir()):
        if rendered >= max_pairs:
            break
        orig_path = run_dir / "original.png"
        pert_path = run_dir / "perturbed.png"
        if not (orig_path.is_file() and pert_path.is_file()):
            continue
        a = Image.load(orig_path)
        b = Image.load(pert_path)
        spectrum_figure(a, b, out_dir / f"spectrum_{run_dir.name}.png")
        rendered += 1
    logger.info("report written to %s (%d spectrum figures)", out_dir, rendered)
    return digest
