"""Command-line entry points."""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from .corpus import Modality, ingest_references
from .gateway import BackendKind, BackendSpec, ModelGateway, ResponseCache
from .indexing import Metric, build_index, inspect_index, save_index
from .metrics import format_report
from .pipeline import (
    ablate,
    config_from_yaml,
    evaluate,
    format_ablation,
    run_pipeline,
)


@click.group()
def main():
    """Zero-shot multi-modal open-domain QA over text, tables, and images."""


@main.group()
def index():
    """Build and inspect vector index files."""


@index.command("build")
@click.option("--references", "references_path", required=True, type=click.Path(exists=True))
@click.option("--modality", required=True, type=click.Choice([m.value for m in Modality]))
@click.option(
    "--metric",
    default=Metric.INNER_PRODUCT.value,
    type=click.Choice([m.value for m in Metric]),
)
@click.option("--backend-id", default="embedder")
@click.option("--endpoint", default="")
@click.option("--model", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--cache", "cache_path", default=None, type=click.Path())
@click.option("--replay", is_flag=True, help="Serve embeddings from the cache only.")
def index_build(references_path, modality, metric, backend_id, endpoint, model, out_path, cache_path, replay):
    """Embed reference contents and write a MOQI index file."""
    store = ingest_references(references_path, Modality(modality))
    backend = BackendSpec(
        backend_id=backend_id,
        kind=BackendKind.EMBEDDING,
        endpoint=endpoint,
        model_name=model,
    )
    gateway = ModelGateway(cache_path=cache_path, replay=replay)
    ids = []
    vectors = []
    for reference in store:
        ids.append(reference.id)
        vectors.append(gateway.embed(backend, reference.content_text()))
    built = build_index(
        np.asarray(vectors, dtype=np.float32),
        ids,
        Metric(metric),
        Modality(modality),
    )
    save_index(built, out_path)
    click.echo(
        f"wrote {out_path}: {len(built)} vectors, dim {built.dim}, metric {metric}"
    )


@index.command("inspect")
@click.argument("path", type=click.Path(exists=True))
def index_inspect(path):
    """Print index header fields."""
    info = inspect_index(path)
    click.echo(
        f"version={info['version']} metric={info['metric'].value} "
        f"dim={info['dim']} count={info['count']}"
    )


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=None, type=click.Path())
def run_cmd(config_path, out_dir):
    """Run the full pipeline over a questions file."""
    config = config_from_yaml(config_path)
    result = run_pipeline(config, out_dir=out_dir)
    counters = result.counters
    click.echo(f"results: {result.results_path}")
    click.echo(f"traces:  {result.traces_path}")
    click.echo(
        "calls: "
        + " ".join(f"{stage}={counters.total(stage)}" for stage in counters.cached)
    )
    if result.failures:
        for failure in result.failures:
            click.echo(f"failed qid {failure['qid']}: {failure['error']}", err=True)
        raise SystemExit(1)


@main.command("eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--profile", default="mmcoqa")
@click.option("--out", "out_path", default=None, type=click.Path())
def eval_cmd(pred_path, gold_path, profile, out_path):
    """Score a results file against gold answers."""
    report = evaluate(pred_path, gold_path, profile)
    click.echo(format_report(report))
    if out_path:
        with Path(out_path).open("w", encoding="utf-8") as fh:
            for record in report.to_records():
                fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
        click.echo(f"report: {out_path}")


@main.command("ablate")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--disable", "disable_csv", required=True)
def ablate_cmd(config_path, disable_csv):
    """Compare the full rule set against a variant with rules disabled."""
    config = config_from_yaml(config_path)
    disable = [name.strip() for name in disable_csv.split(",") if name.strip()]
    report = ablate(config, disable)
    click.echo(format_ablation(report))
    out_path = Path(config.output_dir) / "ablation.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    click.echo(f"report: {out_path}")


@main.command("replay-import")
@click.argument("transcript", type=click.Path(exists=True))
@click.option("--cache", "cache_path", required=True, type=click.Path())
def replay_import(transcript, cache_path):
    """Merge a recorded transcript into a response cache."""
    cache = ResponseCache(cache_path)
    added = cache.import_entries(transcript)
    click.echo(f"imported {added} new entries into {cache_path}")


if __name__ == "__main__":
    main()
