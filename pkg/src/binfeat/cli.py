"""Command-line surface for batch extraction, vectorization, and pipeline runs.

Commands stream their inputs, keep output ordering deterministic (input
order) regardless of thread count, and exit nonzero with a machine-readable
summary when any per-file operation fails.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from . import similarity
from .agnostic import PatternSet
from .extract import extract_raw_features
from .pipeline import (
    Candidate,
    AVVendorGraph,
    ReportStore,
    RecordStore,
    SelectionConfig,
    VTClient,
    VTError,
    VTReport,
    demographics,
    label_file,
    load_split,
    select_week,
    split_of_week,
)
from .records import RawFeatures, serialize_record
from .vectorize import FeatureLayout, TOTAL_WIDTH, vectorize, write_matrix


@click.group()
def main() -> None:
    """Static-analysis feature extraction and dataset pipeline tools."""


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8", newline="\n")


def _load_patterns(path) -> PatternSet | None:
    return PatternSet.load(path) if path else None


def _fail(summary: dict) -> None:
    click.echo(json.dumps(summary), err=True)
    sys.exit(1)


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", "-o", default="-", help="Output JSONL path (default stdout).")
@click.option("--patterns", type=click.Path(exists=True), help="Pattern set TSV.")
@click.option("--threads", default=1, show_default=True, help="Worker threads.")
def extract(files, out, patterns, threads) -> None:
    """Extract raw feature documents, one JSON line per input file."""
    pattern_set = _load_patterns(patterns)

    def one(path: str) -> dict:
        with open(path, "rb") as fh:
            content = fh.read()
        return extract_raw_features(content, pattern_set).to_dict()

    errors = []
    fh = _open_out(out)
    try:
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            for path, result in zip(files, pool.map(one, files)):
                fh.write(json.dumps(result, ensure_ascii=False))
                fh.write("\n")
    except OSError as exc:
        errors.append(str(exc))
    finally:
        if fh is not sys.stdout:
            fh.close()
    if errors:
        _fail({"command": "extract", "errors": errors})


@main.command("vectorize")
@click.argument("jsonl", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--layout", type=click.Path(exists=True), help="Layout table TSV.")
def vectorize_cmd(jsonl, out, layout) -> None:
    """Vectorize a JSONL of raw feature documents into a matrix file."""
    feature_layout = FeatureLayout.load(layout) if layout else None
    vectors = []
    labels = []
    with open(jsonl, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            raw = RawFeatures.from_dict(obj)
            vectors.append(vectorize(raw, feature_layout))
            labels.append(float(obj.get("label", 0)))
    matrix = (
        np.stack(vectors)
        if vectors
        else np.zeros((0, TOTAL_WIDTH), dtype=np.float32)
    )
    write_matrix(matrix, np.asarray(labels, dtype=np.float32), out)
    click.echo(f"wrote {matrix.shape[0]} rows x {matrix.shape[1]} cols to {out}")


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", "-o", default="-", help="Output TSV path (default stdout).")
def digest(files, out) -> None:
    """Print sha256 and similarity digest for each file."""
    fh = _open_out(out)
    try:
        for path in files:
            with open(path, "rb") as inp:
                content = inp.read()
            sha = hashlib.sha256(content).hexdigest()
            d = similarity.digest(content)
            fh.write(f"{sha}\t{d if d is not None else '-'}\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


@main.command()
@click.argument("reports_dir", type=click.Path(exists=True))
@click.option("--vendor-graph", type=click.Path(exists=True), help="Cluster TSV.")
@click.option("--out", "-o", default="-", help="Label manifest path.")
def label(reports_dir, vendor_graph, out) -> None:
    """Label every file in a report store from its first and latest reports."""
    graph = AVVendorGraph.load(vendor_graph)
    store = ReportStore(reports_dir)
    fh = _open_out(out)
    try:
        for sha in sorted(store.hashes()):
            retrievals = store.retrievals(sha)
            initial = retrievals[0][1]
            rescan = retrievals[-1][1]
            fh.write(f"{sha}\t{label_file(initial, rescan, graph)}\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


@main.command()
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--seed", required=True, type=int, help="Selection RNG seed.")
@click.option("--max-file-size", default=100 * 1024 * 1024, show_default=True)
@click.option("--out", "-o", default="-", help="Selection manifest path.")
def select(manifest, seed, max_file_size, out) -> None:
    """Run weekly threshold-bounded selection over a candidate manifest.

    Input rows: sha256, week, file_type, label, size, tlsh ("-" for null).
    Output rows: sha256, week, file_type, label, split.
    """
    weeks: dict[int, list[Candidate]] = {}
    with open(manifest, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            sha, week, file_type, lbl, size, tlsh = line.split("\t")
            weeks.setdefault(int(week), []).append(
                Candidate(
                    sha256=sha,
                    file_type=file_type,
                    label=int(lbl),
                    size=int(size),
                    week=int(week),
                    tlsh=None if tlsh == "-" else tlsh,
                )
            )
    config = SelectionConfig(seed=seed, max_file_size=max_file_size)
    fh = _open_out(out)
    shortfalls = {}
    try:
        for week in sorted(weeks):
            result = select_week(weeks[week], config)
            for cand in result.selected:
                fh.write(
                    f"{cand.sha256}\t{cand.week}\t{cand.file_type}\t"
                    f"{cand.label}\t{split_of_week(cand.week)}\n"
                )
            if result.shortfall:
                shortfalls[week] = {
                    f"{ft}/{lb}": n for (ft, lb), n in result.shortfall.items()
                }
    finally:
        if fh is not sys.stdout:
            fh.close()
    if shortfalls:
        click.echo(json.dumps({"shortfall": shortfalls}), err=True)


@main.command()
@click.argument("store_dir", type=click.Path(exists=True))
@click.option("--split", "split_name", type=click.Choice(["train", "test", "challenge"]))
@click.option("--type", "type_filter", default=None, help="File type or PE or all.")
@click.option("--label-kind", default=None, help="all, malicious-benign, family-labeled, or a tag category.")
@click.option("--out", "-o", default="-", help="Output JSONL path.")
def split(store_dir, split_name, type_filter, label_kind, out) -> None:
    """Stream records from a store under split/type/label-kind filters."""
    store = RecordStore(store_dir)
    fh = _open_out(out)
    try:
        for record in load_split(store, split_name, type_filter, label_kind):
            fh.write(serialize_record(record))
            fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _client(api_key_env: str, dead_letter: str | None) -> VTClient:
    return VTClient(api_key_env=api_key_env, dead_letter_path=dead_letter)


@main.command()
@click.argument("hashes", nargs=-1, required=True)
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--api-key-env", default="VT_API_KEY", show_default=True)
@click.option("--dead-letter", type=click.Path(), default=None)
def fetch(hashes, store_dir, api_key_env, dead_letter) -> None:
    """Fetch analysis reports and append them to a report store."""
    client = _client(api_key_env, dead_letter)
    store = ReportStore(store_dir)
    outcomes = {}
    for sha in hashes:
        try:
            report = VTReport.from_dict(client.fetch_report(sha))
            store.append(report, int(time.time()))
            outcomes[sha] = "ok"
        except VTError as exc:
            outcomes[sha] = str(exc)
    if any(v != "ok" for v in outcomes.values()):
        _fail({"command": "fetch", "outcomes": outcomes})


@main.command()
@click.argument("hashes", nargs=-1, required=True)
@click.option("--api-key-env", default="VT_API_KEY", show_default=True)
@click.option("--dead-letter", type=click.Path(), default=None)
def rescan(hashes, api_key_env, dead_letter) -> None:
    """Request a fresh analysis for each hash."""
    client = _client(api_key_env, dead_letter)
    outcomes = {}
    for sha in hashes:
        try:
            client.request_rescan(sha)
            outcomes[sha] = "ok"
        except VTError as exc:
            outcomes[sha] = str(exc)
    if any(v != "ok" for v in outcomes.values()):
        _fail({"command": "rescan", "outcomes": outcomes})


@main.command()
@click.argument("hashes", nargs=-1, required=True)
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--api-key-env", default="VT_API_KEY", show_default=True)
@click.option("--dead-letter", type=click.Path(), default=None)
def download(hashes, out_dir, api_key_env, dead_letter) -> None:
    """Download file contents by hash into a directory."""
    import os

    client = _client(api_key_env, dead_letter)
    os.makedirs(out_dir, exist_ok=True)
    outcomes = {}
    for sha in hashes:
        try:
            content = client.download_file(sha)
            with open(os.path.join(out_dir, sha), "wb") as fh:
                fh.write(content)
            outcomes[sha] = "ok"
        except VTError as exc:
            outcomes[sha] = str(exc)
    if any(v != "ok" for v in outcomes.values()):
        _fail({"command": "download", "outcomes": outcomes})


@main.command()
@click.argument("store_dir", type=click.Path(exists=True))
def stats(store_dir) -> None:
    """Family and tag demographics for a record store, as JSON."""
    store = RecordStore(store_dir)
    click.echo(json.dumps(demographics(iter(store)), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
