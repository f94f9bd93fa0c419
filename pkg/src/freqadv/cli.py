"""Command-line interface.

Exit codes: 0 on full success, 1 when some runs failed but others
completed, 2 on fatal errors (bad flags, unreadable inputs, mismatched
dimensions).
"""
from __future__ import annotations

import dataclasses
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import __version__
from .dataset import (
    ManifestEntry,
    RunRecord,
    load_manifest,
    load_summaries,
    manifest_from_csv,
    persist_run,
    save_gray_png,
    scale_to_bytes,
)
from .engine import AttackConfig, Task, run_attack
from .errors import EmptyInputError, FreqAdvError
from .image import Image
from .oracle import OracleClient
from .oracle.mocks import (
    HashProjectionEmbedder,
    calibrated_caption_mock,
    calibrated_realism_mock,
    mock_band_energy_oracle,
    mock_caption_oracle,
    CompositeMockOracle,
)
from .report import (
    render_report,
    analyze_runs,
    spectrum_figure,
    write_pixel_runs_csv,
    write_profiles_csv,
)
from .server import MockServerConfig, serve_forever
from .spectral import diff_maps, radial_power_spectrum
from .util import derive_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2


class FatalError(click.ClickException):
    """A fatal CLI failure: exits with status 2."""

    exit_code = EXIT_FATAL


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@click.group()
@click.version_option(version=__version__, prog_name="freqadv")
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Sparse spectral perturbation attacks against vision-language oracles."""
    _setup_logging(verbose)


def _attack_options(fn):
    options = [
        click.option("--manifest", "manifest_path", required=True,
                     type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     help="JSONL dataset manifest."),
        click.option("--out", "out_dir", required=True,
                     type=click.Path(file_okay=False, path_type=Path),
                     help="Directory run artifacts are persisted under."),
        click.option("--oracle-url", default=None, help="Oracle server root URL."),
        click.option("--mock-oracle", is_flag=True,
                     help="Use the in-process mock oracle instead of a server."),
        click.option("--embed-url", default=None,
                     help="Embedding endpoint root URL when served separately."),
        click.option("--token", default=None,
                     help="Bearer token (defaults to FREQADV_ORACLE_TOKEN)."),
        click.option("--config", "config_path", default=None,
                     type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     help="TOML or JSON attack configuration."),
        click.option("--seed", type=int, default=None, help="Base seed for the batch."),
        click.option("--band", nargs=2, type=float, default=None,
                     help="Band bounds alpha1 alpha2 overriding the task default."),
        click.option("--rho", type=float, default=None, help="Pair budget fraction."),
        click.option("--sigma-factor", type=float, default=None,
                     help="Noise std as a fraction of H*W."),
        click.option("--candidates", type=int, default=None,
                     help="Candidates drawn per step."),
        click.option("--max-steps", type=int, default=None, help="Greedy step budget."),
        click.option("--jobs", type=int, default=1, show_default=True,
                     help="Images attacked concurrently."),
        click.option("--candidates-parallel", type=int, default=1, show_default=True,
                     help="Candidate evaluations in flight per step."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build_config(
    task: Task, config_path: Path | None, seed: int | None, band, rho, sigma_factor,
    candidates, max_steps, **extra,
) -> AttackConfig:
    if config_path is not None:
        cfg = AttackConfig.from_file(config_path)
        if cfg.task is not task:
            raise click.UsageError(
                f"config file targets task {cfg.task.value!r}, expected {task.value!r}"
            )
    else:
        cfg = AttackConfig.for_realism() if task is Task.REALISM else AttackConfig.for_caption()
    updates: dict = {}
    if seed is not None:
        updates["seed"] = seed
    if band:
        updates["band"] = (band[0], band[1])
    if rho is not None:
        updates["rho"] = rho
    if sigma_factor is not None:
        updates["sigma_factor"] = sigma_factor
    if candidates is not None:
        updates["n_candidates"] = candidates
    if max_steps is not None:
        updates["max_steps"] = max_steps
    updates.update({k: v for k, v in extra.items() if v is not None})
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _require_oracle_choice(oracle_url: str | None, mock_oracle: bool) -> None:
    if oracle_url and mock_oracle:
        raise click.UsageError("--oracle-url and --mock-oracle are mutually exclusive")
    if not oracle_url and not mock_oracle:
        raise click.UsageError("one of --oracle-url or --mock-oracle is required")


def _run_batch(
    task: Task,
    entries: list[ManifestEntry],
    cfg: AttackConfig,
    out_dir: Path,
    *,
    oracle_url: str | None,
    embed_url: str | None,
    token: str | None,
    mock_oracle: bool,
    mock_gain: float | None,
    mock_offset: float | None,
    mock_buckets: int,
    mock_e_min: float | None,
    mock_e_max: float | None,
    jobs: int,
    candidates_parallel: int,
) -> int:
    failures = 0

    def run_one(indexed: tuple[int, ManifestEntry]) -> tuple[ManifestEntry, str | None]:
        index, entry = indexed
        entry_cfg = dataclasses.replace(cfg, seed=derive_seed(cfg.seed, index))
        try:
            img = Image.load(entry.image)
            sigma = entry_cfg.sigma_factor * img.height * img.width
            if mock_oracle:
                oracle = _build_mock(
                    task, img, entry_cfg, sigma,
                    mock_gain, mock_offset, mock_buckets, mock_e_min, mock_e_max,
                )
            else:
                oracle = OracleClient(oracle_url, embed_url=embed_url, token=token)
            result = run_attack(
                img, entry_cfg, oracle,
                y_gt=entry.gt.as_score() if task is Task.REALISM else None,
                candidates_parallel=candidates_parallel,
            )
            run_dir = persist_run(
                RunRecord(entry=entry, config=entry_cfg, result=result, original=img),
                out_dir,
            )
            status = "goal reached" if result.success else "goal not reached"
            if result.error:
                return entry, result.error
            logger.info("%s -> %s (%s, %d queries)",
                        entry.image.name, run_dir.name, status, result.total_queries)
            return entry, None
        except FreqAdvError as exc:
            return entry, str(exc)

    indexed_entries = list(enumerate(entries))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_one, indexed_entries))
    else:
        outcomes = [run_one(pair) for pair in indexed_entries]

    for entry, error in outcomes:
        if error is not None:
            failures += 1
            logger.error("run failed for %s: %s", entry.image, error)

    done = len(outcomes) - failures
    click.echo(f"completed {done}/{len(outcomes)} runs into {out_dir}")
    if failures == 0:
        return EXIT_OK
    return EXIT_PARTIAL if done else EXIT_FATAL


def _build_mock(
    task: Task, img: Image, cfg: AttackConfig, sigma: float,
    gain: float | None, offset: float | None, buckets: int,
    e_min: float | None, e_max: float | None,
):
    if task is Task.REALISM:
        if gain is not None and offset is not None:
            return mock_band_energy_oracle(cfg.band, gain=gain, offset=offset)
        return calibrated_realism_mock(img, cfg.band, sigma, cfg.rho)
    embedder = HashProjectionEmbedder()
    if e_min is not None and e_max is not None:
        captioner = mock_caption_oracle(cfg.band, buckets, e_min, e_max)
    else:
        captioner = calibrated_caption_mock(img, cfg.band, sigma, nbuckets=buckets)
    return CompositeMockOracle(captioner=captioner, embedder=embedder)


@main.command("attack-realism")
@_attack_options
@click.option("--tau1", type=int, default=None, help="Lower score threshold.")
@click.option("--tau2", type=int, default=None, help="Upper score threshold.")
@click.option("--mock-gain", type=float, default=None,
              help="Fixed mock gain (with --mock-offset disables auto-calibration).")
@click.option("--mock-offset", type=float, default=None,
              help="Fixed mock energy offset.")
def attack_realism(
    manifest_path: Path, out_dir: Path, oracle_url, mock_oracle, embed_url, token,
    config_path, seed, band, rho, sigma_factor, candidates, max_steps,
    jobs, candidates_parallel, tau1, tau2, mock_gain, mock_offset,
) -> None:
    """Greedily push realism scores across the decision boundary."""
    _require_oracle_choice(oracle_url, mock_oracle)
    try:
        cfg = _build_config(
            Task.REALISM, config_path, seed, band, rho, sigma_factor,
            candidates, max_steps, tau1=tau1, tau2=tau2,
        )
        entries = load_manifest(manifest_path)
        if not entries:
            raise FatalError("manifest holds no usable entries")
        code = _run_batch(
            Task.REALISM, entries, cfg, out_dir,
            oracle_url=oracle_url, embed_url=embed_url, token=token,
            mock_oracle=mock_oracle, mock_gain=mock_gain, mock_offset=mock_offset,
            mock_buckets=63, mock_e_min=None, mock_e_max=None,
            jobs=jobs, candidates_parallel=candidates_parallel,
        )
    except FreqAdvError as exc:
        raise FatalError(str(exc)) from exc
    sys.exit(code)


@main.command("attack-caption")
@_attack_options
@click.option("--tau-sim", type=float, default=None,
              help="Cosine similarity below which the caption counts as drifted.")
@click.option("--mock-buckets", type=int, default=63, show_default=True,
              help="Bucket count for the caption mock (odd).")
@click.option("--mock-e-min", type=float, default=None,
              help="Fixed mock bucket range lower edge (with --mock-e-max).")
@click.option("--mock-e-max", type=float, default=None,
              help="Fixed mock bucket range upper edge.")
def attack_caption(
    manifest_path: Path, out_dir: Path, oracle_url, mock_oracle, embed_url, token,
    config_path, seed, band, rho, sigma_factor, candidates, max_steps,
    jobs, candidates_parallel, tau_sim, mock_buckets, mock_e_min, mock_e_max,
) -> None:
    """Greedily push captions away from their baseline meaning."""
    _require_oracle_choice(oracle_url, mock_oracle)
    try:
        cfg = _build_config(
            Task.CAPTION, config_path, seed, band, rho, sigma_factor,
            candidates, max_steps, tau_sim=tau_sim,
        )
        entries = load_manifest(manifest_path)
        if not entries:
            raise FatalError("manifest holds no usable entries")
        code = _run_batch(
            Task.CAPTION, entries, cfg, out_dir,
            oracle_url=oracle_url, embed_url=embed_url, token=token,
            mock_oracle=mock_oracle, mock_gain=None, mock_offset=None,
            mock_buckets=mock_buckets, mock_e_min=mock_e_min, mock_e_max=mock_e_max,
            jobs=jobs, candidates_parallel=candidates_parallel,
        )
    except FreqAdvError as exc:
        raise FatalError(str(exc)) from exc
    sys.exit(code)


@main.command()
@click.option("--runs-dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Directory holding persisted runs.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False, path_type=Path),
              help="Directory report tables are written to.")
@click.option("--tau1", type=int, default=4, show_default=True)
@click.option("--tau2", type=int, default=6, show_default=True)
def analyze(runs_dir: Path, out_dir: Path, tau1: int, tau2: int) -> None:
    """Aggregate persisted runs into CSV tables and a JSON digest."""
    try:
        summaries = load_summaries(runs_dir)
        digest = analyze_runs(summaries, out_dir, tau1, tau2)
    except EmptyInputError as exc:
        logger.error("%s", exc)
        sys.exit(EXIT_PARTIAL)
    except FreqAdvError as exc:
        raise FatalError(str(exc)) from exc
    click.echo(
        f"analyzed {digest['n_runs']} runs: "
        f"{len(digest['realism'])} realism rows, {len(digest['caption'])} caption rows"
    )


@main.command()
@click.option("--image-a", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--image-b", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False, path_type=Path))
@click.option("--nbins", type=int, default=64, show_default=True,
              help="Radial profile bin count.")
def spectrum(image_a: Path, image_b: Path, out_dir: Path, nbins: int) -> None:
    """Compare two images in pixel and frequency space."""
    try:
        a = Image.load(image_a)
        b = Image.load(image_b)
        out_dir.mkdir(parents=True, exist_ok=True)
        profiles = {
            "a": radial_power_spectrum(a, nbins),
            "b": radial_power_spectrum(b, nbins),
        }
        write_profiles_csv(out_dir / "radial_profiles.csv", profiles)
        pixel_map, freq_map = diff_maps(a, b)
        save_gray_png(out_dir / "pixel_diff.png", pixel_map * 255)
        save_gray_png(out_dir / "freq_diff.png", scale_to_bytes(freq_map))
        write_pixel_runs_csv(out_dir / "pixel_runs.csv", pixel_map)
        spectrum_figure(a, b, out_dir / "spectrum_compare.png",
                        nbins=nbins, label_a=image_a.name, label_b=image_b.name)
    except FreqAdvError as exc:
        raise FatalError(str(exc)) from exc
    click.echo(f"spectrum comparison written to {out_dir}")


@main.command()
@click.option("--runs-dir", required=True,
              type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False, path_type=Path))
@click.option("--tau1", type=int, default=4, show_default=True)
@click.option("--tau2", type=int, default=6, show_default=True)
@click.option("--max-pairs", type=int, default=4, show_default=True,
              help="Spectrum figures rendered for at most this many runs.")
def report(runs_dir: Path, out_dir: Path, tau1: int, tau2: int, max_pairs: int) -> None:
    """Analyze runs and render figures alongside the CSV tables."""
    try:
        summaries = load_summaries(runs_dir)
        render_report(summaries, runs_dir, out_dir, tau1=tau1, tau2=tau2, max_pairs=max_pairs)
    except EmptyInputError as exc:
        logger.error("%s", exc)
        sys.exit(EXIT_PARTIAL)
    except FreqAdvError as exc:
        raise FatalError(str(exc)) from exc
    click.echo(f"report written to {out_dir}")


@main.command("serve-mock")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8008, show_default=True)
@click.option("--realism-band", nargs=2, type=float, default=(0.85, 1.0),
              show_default=True)
@click.option("--gain", type=float, default=0.0, show_default=True,
              help="Band-energy mock gain (0 scores everything 5).")
@click.option("--offset", type=float, default=0.0, show_default=True,
              help="Band-energy mock offset.")
@click.option("--caption-band", nargs=2, type=float, default=(0.49, 0.51),
              show_default=True)
@click.option("--nbuckets", type=int, default=63, show_default=True)
@click.option("--e-min", type=float, default=0.0, show_default=True)
@click.option("--e-max", type=float, default=1e9, show_default=True)
@click.option("--embed-dim", type=int, default=256, show_default=True)
@click.option("--token", default=None, help="Require this bearer token.")
@click.option("--max-image-side", type=int, default=4096, show_default=True)
def serve_mock(
    host, port, realism_band, gain, offset, caption_band, nbuckets,
    e_min, e_max, embed_dim, token, max_image_side,
) -> None:
    """Host the mock oracles over the wire protocol."""
    config = MockServerConfig(
        realism=mock_band_energy_oracle(tuple(realism_band), gain=gain, offset=offset),
        captioner=mock_caption_oracle(tuple(caption_band), nbuckets, e_min, e_max),
        embedder=HashProjectionEmbedder(dim=embed_dim),
        token=token,
        max_image_side=max_image_side,
    )
    serve_forever(config, host, port)


@main.command("manifest-from-csv")
@click.option("--csv", "csv_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_path", required=True,
              type=click.Path(dir_okay=False, path_type=Path))
def manifest_from_csv_cmd(csv_path: Path, out_path: Path) -> None:
    """Convert a CSV listing (image, gt, tag[, caption]) into a manifest."""
    try:
        count = manifest_from_csv(csv_path, out_path)
    except FreqAdvError as exc:
        raise FatalError(str(exc)) from exc
    click.echo(f"wrote {count} entries to {out_path}")


if __name__ == "__main__":
    main()
