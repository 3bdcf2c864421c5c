"""Command-line pipeline: ingest → clean → label → cluster → features →
train/evaluate/ablate, plus a synthetic-data generator so the whole protocol
can run without any ingested data.

Global flags: ``--config`` points at a JSON file overriding the protocol
defaults, ``--seed`` overrides the split seed, ``--out`` picks the output
directory.  Reports are always written as both JSON and aligned-column text.
"""
from __future__ import annotations

import dataclasses
import functools
import json
from datetime import date
from pathlib import Path

import click

from . import catalog as cat
from . import clustering, corpus, features, gdelt, synthetic, weak_label
from .experiment import TrainConfig, ablation, run_protocol, split_indices, train
from .models import Arch, Head, ModelSpec, build, predict_ratings
from .experiment import abs_diff_metrics

_ARCHS = {a.value: a for a in Arch}
_HEADS = {h.value: h for h in Head}

_EXTRA_KEYS = {
    "k_clusters", "metric", "include_noise_sentiment", "combination",
    "weak_threshold", "weak_aggregation", "min_articles", "max_records",
    "error_phrases", "scrub_patterns", "min_article_chars",
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    known = {f.name for f in dataclasses.fields(TrainConfig)} | _EXTRA_KEYS
    unknown = sorted(set(raw) - known)
    if unknown:
        raise click.ClickException(f"unknown config keys: {', '.join(unknown)}")
    return raw


def _train_config(raw: dict, seed: int | None) -> TrainConfig:
    names = {f.name for f in dataclasses.fields(TrainConfig)}
    kwargs = {k: v for k, v in raw.items() if k in names}
    if seed is not None:
        kwargs["split_seed"] = seed
    try:
        return TrainConfig(**kwargs)
    except ValueError as exc:
        raise click.ClickException(f"bad config: {exc}") from exc


def _friendly(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, KeyError, FileNotFoundError, cat.CatalogError) as exc:
            raise click.ClickException(str(exc)) from exc
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file with protocol settings.")
@click.option("--seed", type=int, default=None, help="Override the split seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".",
              show_default=True, help="Output directory.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, seed: int | None, out_dir: str) -> None:
    """News-derived ESG signal pipeline and rating-prediction protocol."""
    raw = _load_config(config_path)
    ctx.obj = {
        "raw": raw,
        "cfg": _train_config(raw, seed),
        "out": Path(out_dir),
    }
    ctx.obj["out"].mkdir(parents=True, exist_ok=True)


def _months(start: str, end: str) -> list[date]:
    first = corpus.parse_month(start)
    last = corpus.parse_month(end)
    if first > last:
        raise click.ClickException(f"--start {start} is after --end {end}")
    out, cur = [], first
    while cur <= last:
        out.append(cur)
        cur = date(cur.year + (cur.month == 12), cur.month % 12 + 1, 1)
    return out


@main.command()
@click.option("--catalog", "catalog_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--start", required=True, help="First month, YYYY-MM.")
@click.option("--end", required=True, help="Last month, YYYY-MM.")
@click.option("--max-records", default=gdelt.MAX_RECORDS_LIMIT, show_default=True)
@click.option("--rate", default=1.0, show_default=True, help="Requests per second.")
@click.pass_obj
@_friendly
def ingest(obj: dict, catalog_dir: str, start: str, end: str, max_records: int, rate: float) -> None:
    """Fetch article metadata month by month and write raw-article JSONL.

    Bodies are not crawled here; fill in paragraphs with your own fetcher
    before `clean` (articles without enough text are dropped there).
    """
    companies, _ = cat.load_catalog(catalog_dir)
    combination = obj["raw"].get("combination", gdelt.DEFAULT_COMBINATION)
    transport = gdelt.RequestsTransport()
    limiter = gdelt.TokenBucket(rate=rate)
    archive = obj["out"] / "archive"

    raws: list[corpus.RawArticle] = []
    for company in companies:
        for month in _months(start, end):
            query = gdelt.build_company_query(company, month, max_records=max_records)
            hits = gdelt.fetch(query, transport, combination=combination, limiter=limiter,
                               archive_dir=archive, company_id=company.id)
            for hit in hits:
                raws.append(corpus.RawArticle(
                    company_id=company.id,
                    month=date(hit.seen_date.year, hit.seen_date.month, 1),
                    url=hit.url,
                    title=hit.title,
                    paragraphs=(),
                ))
            click.echo(f"{company.id} {corpus.format_month(month)}: {len(hits)} hits")
    target = obj["out"] / "raw_articles.jsonl"
    corpus.write_raw_articles(target, raws)
    click.echo(f"wrote {len(raws)} raw articles to {target}")


@main.command()
@click.option("--raw", "raw_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--catalog", "catalog_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.pass_obj
@_friendly
def clean(obj: dict, raw_path: str, catalog_dir: str) -> None:
    """Filter/scrub raw articles and summarize them into pipeline records."""
    companies, _ = cat.load_catalog(catalog_dir)
    by_id = {c.id: c for c in companies}
    error_phrases = obj["raw"].get("error_phrases", corpus.DEFAULT_ERROR_PHRASES)
    scrub_patterns = obj["raw"].get("scrub_patterns", corpus.DEFAULT_SCRUB_PATTERNS)

    kept, dropped = [], 0
    for raw in corpus.read_raw_articles(raw_path):
        company = by_id.get(raw.company_id)
        if company is None:
            raise click.ClickException(f"article for unknown company {raw.company_id!r}")
        cleaned = corpus.clean(raw, company, error_phrases, scrub_patterns)
        if cleaned is None:
            dropped += 1
            continue
        kept.append(corpus.make_record(cleaned))
    target = obj["out"] / "records.jsonl"
    corpus.write_records(target, kept)
    click.echo(f"kept {len(kept)}, dropped {dropped}; wrote {target}")


@main.command()
@click.option("--records", "records_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Article embeddings (with .ids.csv sidecar) for similarity labeling.")
@click.option("--definitions", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Category-definition vectors, same binary format.")
@click.option("--relevance-csv", type=click.Path(exists=True, dir_okay=False), default=None,
              help="article_id,relevance_prob from an external classifier.")
@click.option("--sentiment-csv", type=click.Path(exists=True, dir_okay=False), default=None,
              help="article_id,sentiment (positive|negative) from an external classifier.")
@click.pass_obj
@_friendly
def label(obj: dict, records_path: str, embeddings: str | None, definitions: str | None,
          relevance_csv: str | None, sentiment_csv: str | None) -> None:
    """Weak-label records by embedding similarity and/or attach predictions."""
    if (embeddings is None) != (definitions is None):
        raise click.ClickException("--embeddings and --definitions go together")
    if embeddings is None and relevance_csv is None and sentiment_csv is None:
        raise click.ClickException("nothing to do: give embeddings or prediction CSVs")

    records = corpus.read_records(records_path)
    if embeddings is not None:
        table = weak_label.EmbeddingTable.from_files(embeddings, definitions)
        cfg = weak_label.WeakLabelConfig(
            threshold=obj["raw"].get("weak_threshold", 0.1),
            aggregation=obj["raw"].get("weak_aggregation", "max"),
        )
        records = weak_label.label_records(records, table, cfg)
        n_rel = sum(r.relevance_label is corpus.Relevance.RELEVANT for r in records)
        click.echo(f"similarity labels: {n_rel}/{len(records)} relevant")
    if relevance_csv is not None or sentiment_csv is not None:
        records = weak_label.attach_predictions(records, relevance_csv, sentiment_csv)
    target = obj["out"] / "records_labeled.jsonl"
    corpus.write_records(target, records)
    click.echo(f"wrote {target}")


@main.command()
@click.option("--embeddings", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, default=None, help="Cluster count (config k_clusters otherwise).")
@click.option("--metric", type=click.Choice(["euclidean", "cosine"]), default="euclidean",
              show_default=True)
@click.option("--elbow", default=None, help="Scan a k range, e.g. 2..10, and write elbow.csv.")
@click.option("--records", "records_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Needed for --scope relevant.")
@click.option("--scope", type=click.Choice(["all", "relevant"]), default="all",
              show_default=True, help="Cluster every embedded article or only Relevant ones.")
@click.pass_obj
@_friendly
def cluster(obj: dict, embeddings: str, k: int | None, metric: str, elbow: str | None,
            records_path: str | None, scope: str) -> None:
    """Fit k-means on article embeddings and write model + assignments."""
    ids, vectors = weak_label.read_embeddings(embeddings)
    if scope == "relevant":
        if records_path is None:
            raise click.ClickException("--scope relevant needs --records")
        relevant = {
            r.article_id for r in corpus.read_records(records_path)
            if r.relevance_label is corpus.Relevance.RELEVANT
        }
        keep = [i for i, aid in enumerate(ids) if aid in relevant]
        ids = [ids[i] for i in keep]
        vectors = vectors[keep]
        if not ids:
            raise click.ClickException("no relevant articles to cluster")
    m = clustering.Metric(metric)
    seed = obj["cfg"].split_seed

    if elbow is not None:
        lo, _, hi = elbow.partition("..")
        scan = clustering.elbow_scan(vectors, range(int(lo), int(hi) + 1), metric=m, seed=seed)
        target = obj["out"] / "elbow.csv"
        target.write_text(
            "k,objective\n" + "".join(f"{kk},{obj_!r}\n" for kk, obj_ in scan),
            encoding="utf-8",
        )
        click.echo(f"wrote {target}")
        return

    k = k if k is not None else obj["raw"].get("k_clusters", clustering.DEFAULT_K)
    model, labels = clustering.kmeans(vectors, k, metric=m, seed=seed)
    clustering.save_model(obj["out"] / "cluster_model", model)
    clustering.write_assignments(obj["out"] / "assignments.csv", ids, labels)
    score = clustering.silhouette(vectors, labels, metric=m) if k >= 2 else float("nan")
    click.echo(
        f"k={k} {metric}: objective {model.sse:.4f} after {model.iterations} iterations, "
        f"silhouette {score:.4f}"
    )
    click.echo(f"wrote {obj['out'] / 'cluster_model'} and {obj['out'] / 'assignments.csv'}")


@main.command(name="features")
@click.option("--records", "records_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--catalog", "catalog_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--year", type=int, required=True)
@click.option("--assignments", type=click.Path(exists=True, dir_okay=False), default=None,
              help="assignments.csv from `cluster` to merge into the records.")
@click.option("--min-articles", type=int, default=None,
              help="Per-company yearly floor (config min_articles otherwise).")
@click.pass_obj
@_friendly
def features_cmd(obj: dict, records_path: str, catalog_dir: str, year: int,
                 assignments: str | None, min_articles: int | None) -> None:
    """Assemble the per-company monthly matrices for one year (unscaled)."""
    companies, ratings = cat.load_catalog(catalog_dir)
    records = corpus.read_records(records_path)
    if assignments is not None:
        mapping = clustering.read_assignments(assignments)
        records = [
            r.with_labels(cluster_id=mapping[r.article_id]) if r.article_id in mapping else r
            for r in records
        ]
    floor = min_articles if min_articles is not None else obj["raw"].get(
        "min_articles", corpus.MIN_ARTICLES_PER_YEAR)
    records = corpus.prune_companies(records, ratings, year, min_articles=floor)
    if not records:
        raise click.ClickException(f"no company passes the {floor}-article floor for {year}")

    k = obj["raw"].get("k_clusters", clustering.DEFAULT_K)
    noise_row = obj["raw"].get("include_noise_sentiment", True)
    series = features.assemble(records, ratings, year, k_clusters=k,
                               companies=companies, include_noise_sentiment=noise_row)
    dataset_dir = obj["out"] / "dataset"
    features.save_dataset(dataset_dir, series, year, k, include_noise_sentiment=noise_row)
    features.dataset_to_csv(obj["out"] / "dataset.csv", series, k,
                            include_noise_sentiment=noise_row)
    click.echo(f"assembled {len(series)} companies for {year}; wrote {dataset_dir}")


def _load_unscaled(dataset_dir: str):
    series, header = features.load_dataset(dataset_dir)
    if header.get("scaled"):
        raise click.ClickException(
            "dataset was saved scaled; training fits its own scaler per split"
        )
    return series, header


@main.command(name="train")
@click.option("--dataset", "dataset_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--arch", type=click.Choice(sorted(_ARCHS)), required=True)
@click.option("--head", type=click.Choice(sorted(_HEADS)), required=True)
@click.pass_obj
@_friendly
def train_cmd(obj: dict, dataset_dir: str, arch: str, head: str) -> None:
    """Train one architecture on a single split and save the checkpoint."""
    import numpy as np

    series, _ = _load_unscaled(dataset_dir)
    cfg: TrainConfig = obj["cfg"]
    spec = ModelSpec(_ARCHS[arch], _HEADS[head])

    rng = np.random.default_rng(cfg.split_seed)
    split = split_indices(len(series), cfg.train_fraction, cfg.val_fraction_of_train, rng)
    scaler = features.fit_scaler([series[i] for i in split.train])
    scaled = np.stack([features.apply_scaler(scaler, s).matrix for s in series])
    targets = np.array([s.target for s in series])

    network = build(spec, input_rows=scaled.shape[1], seed=cfg.split_seed)
    history = train(network, scaled[split.fit], targets[split.fit],
                    scaled[split.val], targets[split.val], cfg,
                    shuffle_rng=np.random.default_rng(cfg.split_seed + 1))

    preds = predict_ratings(network, scaled[split.test])
    metrics = abs_diff_metrics(preds, targets[split.test])
    name = f"model_{arch}_{head}"
    network.save(obj["out"] / name, extra={
        "scaler": {"mean": [float(x) for x in scaler.mean],
                   "std": [float(x) for x in scaler.std]},
    })
    (obj["out"] / f"{name}_history.json").write_text(
        json.dumps(history.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    click.echo(
        f"{arch}/{head}: {history.epochs_run} epochs (best {history.best_epoch}); "
        f"test abs diff mean {metrics.mean:.2f}, std {metrics.std:.2f}, max {metrics.max:.2f}"
    )
    click.echo(f"wrote {obj['out'] / name}")


def _write_report(out: Path, stem: str, report) -> None:
    (out / f"{stem}.json").write_text(report.to_json(), encoding="utf-8")
    (out / f"{stem}.txt").write_text(report.to_text(), encoding="utf-8")
    click.echo(report.to_text())
    click.echo(f"wrote {out / (stem + '.json')} and {out / (stem + '.txt')}")


@main.command()
@click.option("--dataset", "dataset_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--arch", "archs", type=click.Choice(sorted(_ARCHS)), multiple=True,
              help="Repeatable; default: all four architectures.")
@click.option("--head", type=click.Choice(["classification", "regression", "both"]),
              default="regression", show_default=True)
@click.pass_obj
@_friendly
def evaluate(obj: dict, dataset_dir: str, archs: tuple[str, ...], head: str) -> None:
    """Run the full repeated-split protocol and write the report."""
    series, _ = _load_unscaled(dataset_dir)
    chosen = archs or tuple(sorted(_ARCHS))
    heads = [Head.CLASSIFICATION, Head.REGRESSION] if head == "both" else [_HEADS[head]]
    specs = [ModelSpec(_ARCHS[a], h) for a in chosen for h in heads]
    report = run_protocol(series, specs, obj["cfg"])
    _write_report(obj["out"], "report", report)


@main.command()
@click.option("--dataset", "dataset_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.pass_obj
@_friendly
def ablate(obj: dict, dataset_dir: str) -> None:
    """Input-row ablation (relevance / sentiment / semantic / all)."""
    series, _ = _load_unscaled(dataset_dir)
    report = ablation(series, obj["cfg"])
    _write_report(obj["out"], "ablation", report)


@main.command()
@click.option("--companies", type=int, default=300, show_default=True)
@click.option("--year", type=int, default=2020, show_default=True)
@click.option("--mode", type=click.Choice(["linear", "cluster"]), default="linear",
              show_default=True, help="linear: all rows carry signal; cluster: only cluster rows.")
@click.pass_obj
@_friendly
def synth(obj: dict, companies: int, year: int, mode: str) -> None:
    """Generate a synthetic planted-signal dataset for the protocol."""
    seed = obj["cfg"].split_seed
    k = obj["raw"].get("k_clusters", clustering.DEFAULT_K)
    if mode == "linear":
        series = synthetic.planted_linear_dataset(companies, year, seed=seed, k_clusters=k)
    else:
        series = synthetic.cluster_signal_dataset(companies, year, seed=seed, k_clusters=k)
    dataset_dir = obj["out"] / "dataset"
    features.save_dataset(dataset_dir, series, year, k)
    features.dataset_to_csv(obj["out"] / "dataset.csv", series, k)
    click.echo(f"wrote {len(series)} synthetic companies to {dataset_dir}")


if __name__ == "__main__":
    main()
