"""Dataset manifests and run persistence.

A manifest is JSON Lines, one object per image:

    {"image": "path.png", "gt": "real"|"generated", "tag": "set-name",
     "caption": "optional reference caption"}

Image paths are resolved relative to the manifest file's directory.
Runs are persisted into content-addressed directories named by a hash of
(image bytes, canonical config), so re-running the same attack lands in
the same place with identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import shutil
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .engine import AttackConfig, AttackResult, result_to_summary
from .errors import ManifestError, PersistError
from .image import Image
from .spectral import diff_maps, radial_power_spectrum

logger = logging.getLogger(__name__)

RUN_DIR_HASH_CHARS = 16


class GroundTruth(str, Enum):
    REAL = "real"
    GENERATED = "generated"

    def as_score(self) -> int:
        """Ground truth mapped onto the 0-10 scale for goal selection."""
        return 10 if self is GroundTruth.REAL else 0


@dataclass(frozen=True)
class ManifestEntry:
    """One dataset row: an image, its provenance label, and its tag."""

    image: Path
    gt: GroundTruth
    tag: str
    caption: str | None = None


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Read a JSONL manifest.

    Malformed rows raise with the offending line number. Rows whose image
    cannot be opened are skipped with a warning. Duplicate image paths
    are rejected.

    Raises:
        ManifestError: On malformed rows or duplicate paths.
    """
    path = Path(path)
    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[Path] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise ManifestError(f"{path}:{lineno}: row must be an object")
            for key in ("image", "gt", "tag"):
                if key not in row or not isinstance(row[key], str) or not row[key]:
                    raise ManifestError(
                        f"{path}:{lineno}: missing or invalid field {key!r}"
                    )
            try:
                gt = GroundTruth(row["gt"])
            except ValueError as exc:
                raise ManifestError(
                    f"{path}:{lineno}: gt must be 'real' or 'generated', "
                    f"got {row['gt']!r}"
                ) from exc
            caption = row.get("caption")
            if caption is not None and not isinstance(caption, str):
                raise ManifestError(f"{path}:{lineno}: caption must be a string")
            image_path = (base / row["image"]).resolve()
            if image_path in seen:
                raise ManifestError(
                    f"{path}:{lineno}: duplicate image path {row['image']!r}"
                )
            seen.add(image_path)
            if not _openable(image_path):
                logger.warning(
                    "%s:%d: skipping unreadable image %s", path, lineno, image_path
                )
                continue
            entries.append(
                ManifestEntry(image=image_path, gt=gt, tag=row["tag"], caption=caption)
            )
    return entries


def _openable(image_path: Path) -> bool:
    try:
        with PILImage.open(image_path) as im:
            im.verify()
        return True
    except (OSError, ValueError, SyntaxError):
        return False


def write_manifest(entries: list[ManifestEntry], path: str | Path) -> None:
    """Write entries in canonical JSONL form.

    write(load(m)) is byte-identical for manifests already in canonical
    form with relative paths preserved under the target directory.
    """
    path = Path(path)
    base = path.parent.resolve()
    lines = []
    for entry in entries:
        row: dict = {"image": _relative_ref(entry.image, base)}
        row["gt"] = entry.gt.value
        row["tag"] = entry.tag
        if entry.caption is not None:
            row["caption"] = entry.caption
        lines.append(json.dumps(row, sort_keys=True, separators=(", ", ": ")))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _relative_ref(image: Path, base: Path) -> str:
    try:
        return image.resolve().relative_to(base).as_posix()
    except ValueError:
        return str(image)


def manifest_from_csv(
    csv_path: str | Path,
    out_path: str | Path,
    *,
    image_column: str = "image",
    gt_column: str = "gt",
    tag_column: str = "tag",
    caption_column: str = "caption",
) -> int:
    """Convert a CSV listing into a JSONL manifest. Returns the row count.

    Raises:
        ManifestError: If required columns are missing.
    """
    csv_path = Path(csv_path)
    out_path = Path(out_path)
    lines = []
    with csv_path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for required in (image_column, gt_column, tag_column):
            if required not in fields:
                raise ManifestError(f"{csv_path}: missing column {required!r}")
        for i, row in enumerate(reader, start=2):
            obj: dict = {
                "image": row[image_column],
                "gt": row[gt_column],
                "tag": row[tag_column],
            }
            if row.get(caption_column):
                obj["caption"] = row[caption_column]
            if obj["gt"] not in (g.value for g in GroundTruth):
                raise ManifestError(
                    f"{csv_path}:{i}: gt must be 'real' or 'generated', got {obj['gt']!r}"
                )
            lines.append(json.dumps(obj, sort_keys=True, separators=(", ", ": ")))
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(lines)


def run_directory_name(image_bytes: bytes, cfg: AttackConfig) -> str:
    """Content address of a run: sha256 over image bytes and config."""
    canonical = json.dumps(
        cfg.to_canonical_dict(), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    digest = hashlib.sha256(image_bytes + b"\x00" + canonical).hexdigest()
    return digest[:RUN_DIR_HASH_CHARS]


@dataclass(frozen=True)
class RunRecord:
    """A completed attack bound to its input entry and configuration."""

    entry: ManifestEntry
    config: AttackConfig
    result: AttackResult
    original: Image


def persist_run(record: RunRecord, out_dir: str | Path) -> Path:
    """Write all artifacts of one run under out_dir.

    Layout (directory named by run_directory_name):
        summary.json        deterministic run summary
        steps.jsonl         per-step log rows including wall time
        original.png        input as attacked (after codec round-trip)
        perturbed.png       final image
        pixel_diff.png      binary map of touched pixels
        freq_diff.png       log-magnitude spectral difference (grayscale)
        radial_profiles.csv azimuthal log-power of original and perturbed

    A partially written directory is removed on failure.

    Raises:
        PersistError: On any write failure.
    """
    out_dir = Path(out_dir)
    image_bytes = record.entry.image.read_bytes()
    run_dir = out_dir / run_directory_name(image_bytes, record.config)
    created = not run_dir.exists()
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        summary = result_to_summary(
            record.result,
            record.config,
            image_ref=str(record.entry.image),
            gt=record.entry.gt.value,
            tag=record.entry.tag,
        )
        (run_dir / "summary.json").write_text(
            json.dumps(summary, sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )
        step_lines = [
            json.dumps(
                {
                    "step": row.step,
                    "chosen_index": row.chosen_index,
                    "chosen_measure": row.chosen_measure,
                    "adopted": row.adopted,
                    "raw_reply": row.raw_reply,
                    "measure_after": row.measure_after,
                    "queries_after": row.queries_after,
                    "wall_time_s": row.wall_time_s,
                },
                sort_keys=True,
                separators=(",", ":"),
            )
            for row in record.result.steps
        ]
        (run_dir / "steps.jsonl").write_text(
            "\n".join(step_lines) + ("\n" if step_lines else ""), encoding="utf-8"
        )
        record.original.save_png(run_dir / "original.png")
        record.result.final_image.save_png(run_dir / "perturbed.png")

        pixel_map, freq_map = diff_maps(record.original, record.result.final_image)
        save_gray_png(run_dir / "pixel_diff.png", pixel_map * 255)
        save_gray_png(run_dir / "freq_diff.png", scale_to_bytes(freq_map))

        profile_orig = radial_power_spectrum(record.original)
        profile_pert = radial_power_spectrum(record.result.final_image)
        _write_profiles_csv(run_dir / "radial_profiles.csv", profile_orig, profile_pert)
    except Exception as exc:
        if created:
            shutil.rmtree(run_dir, ignore_errors=True)
        raise PersistError(f"failed to persist run into {run_dir}: {exc}") from exc
    return run_dir


def save_gray_png(path: Path, arr: np.ndarray) -> None:
    """Write a uint8 array as a grayscale PNG."""
    PILImage.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(path, format="PNG")


def scale_to_bytes(arr: np.ndarray) -> np.ndarray:
    """Scale a nonnegative float array onto 0-255 uint8 for display."""
    arr = np.asarray(arr, dtype=np.float64)
    top = arr.max()
    if top <= 0.0:
        return np.zeros_like(arr, dtype=np.uint8)
    return np.clip(np.rint(arr / top * 255.0), 0, 255).astype(np.uint8)


def _write_profiles_csv(path: Path, original, perturbed) -> None:
    nbins = len(original)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin", "radius_center", "log_power_original", "log_power_perturbed"])
        for i in range(nbins):
            center = (i + 0.5) / nbins
            writer.writerow(
                [i, f"{center:.6f}", f"{original[i]:.10g}", f"{perturbed[i]:.10g}"]
            )


def load_summaries(runs_dir: str | Path) -> list[dict]:
    """Collect every summary.json under a runs directory (sorted by path)."""
    runs_dir = Path(runs_dir)
    summaries = []
    for summary_path in sorted(runs_dir.glob("*/summary.json")):
        try:
            summaries.append(json.loads(summary_path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{summary_path}: invalid JSON: {exc}") from exc
    return summaries
