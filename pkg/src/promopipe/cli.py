"""Command-line interface: ingest | decompose | run | evaluate | serve."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import ConfigError, PipelineConfig
from .decompose import decompose
from .evaluation.report import (
    evaluate_run,
    records_to_csv,
    summarize,
    summary_to_json,
)
from .orchestrator import run_pipeline
from .store import AssetStore


def _load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig.from_dict({})
    try:
        return PipelineConfig.from_toml(path)
    except (ConfigError, OSError) as exc:
        raise click.ClickException(str(exc))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose):
    """Generative marketing-image pipeline."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--dir", "directory", type=click.Path(exists=True, file_okay=False),
              required=True, help="Directory of images to ingest.")
@click.option("--kind", type=click.Choice(["product", "background"]), required=True)
def ingest(config_path, directory, kind):
    """Embed and store every image in a directory."""
    config = _load_config(config_path)
    backends = config.build_backends()
    store = AssetStore(config.store_path, backends.embed)
    count = store.ingest(directory, kind)
    click.echo(f"ingested {count} new {kind} asset(s) into {config.store_path}")


@main.command("decompose")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--prompt", required=True)
def decompose_cmd(config_path, prompt):
    """Print the marketing brief for a prompt as JSON."""
    config = _load_config(config_path)
    backends = config.build_backends()
    brief = decompose(prompt, backends.llm)
    click.echo(json.dumps(brief.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--prompt", required=True)
@click.option("--seed", type=int, default=None, help="Override run_seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Override the runs directory.")
def run(config_path, prompt, seed, out_dir):
    """Run the full pipeline for one prompt."""
    config = _load_config(config_path)
    if seed is not None:
        config.data["run_seed"] = seed
    if out_dir is not None:
        config.data["runs_dir"] = out_dir
    manifest = run_pipeline(prompt, config)
    click.echo(f"run_id: {manifest['run_id']}")
    click.echo(f"status: {manifest['status']}")
    click.echo(f"selected: {manifest['selected']}")
    click.echo(f"manifest: {Path(config.runs_dir) / manifest['run_id'] / 'manifest.json'}")
    if manifest["status"] == "failed":
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--run", "run_id", required=True, help="Run id to evaluate.")
@click.option("--references", "references", type=click.Path(exists=True),
              default=None, help="Asset store with reference products "
              "(defaults to the configured store).")
@click.option("--baseline", "baseline_run", default=None,
              help="Second run id; adds paired t-tests against it.")
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Write per-pair records to this CSV file.")
def evaluate(config_path, run_id, references, baseline_run, csv_path):
    """Product-fidelity metrics for a persisted run."""
    config = _load_config(config_path)
    backends = config.build_backends()
    store_path = references or config.store_path
    store = AssetStore(store_path, backends.embed)
    records = evaluate_run(config.runs_dir, run_id, store, backends.embed)
    baseline_records = None
    if baseline_run:
        baseline_records = evaluate_run(
            config.runs_dir, baseline_run, store, backends.embed)
    csv_text = records_to_csv(records)
    if csv_path:
        Path(csv_path).write_text(csv_text, encoding="utf-8")
        click.echo(f"wrote {len(records)} record(s) to {csv_path}")
    else:
        click.echo(csv_text, nl=False)
    click.echo(summary_to_json(summarize(records, baseline_records)), nl=False)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--frontend", "frontend_dir", type=click.Path(file_okay=False),
              default=None, help="Static review-UI build to host at /. "
              "Defaults to ./frontend/dist when present.")
def serve(config_path, host, port, frontend_dir):
    """Serve the run-browser API (and the review UI if built)."""
    from .server import serve as serve_app

    config = _load_config(config_path)
    if frontend_dir is None:
        default_dist = Path("frontend") / "dist"
        frontend_dir = default_dist if default_dist.exists() else None
    serve_app(config.runs_dir, host=host, port=port, frontend_dir=frontend_dir)


if __name__ == "__main__":
    main()
