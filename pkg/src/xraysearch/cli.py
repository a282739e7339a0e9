"""Command-line front end: synth, train, index, query, evaluate, stats.

Option values resolve in three layers: built-in defaults, then an optional
TOML config file, then explicit flags. The fully resolved configuration is
echoed on one line at the start of every run so any output can be
reproduced from its log.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from . import dataset, evaluation, search, stacked
from .autoencoder import TrainConfig
from .errors import XraySearchError
from .irma import Taxonomy


class CliUsageError(Exception):
    """Bad invocation: wrong flags, bad config keys, missing options."""


DEFAULTS = {
    "synth": {"out": None, "seed": 7, "train": 100, "test": 20, "classes": 5},
    "train": {"manifest": None, "dims": None, "epochs": 30, "lr": 0.1,
              "batch_size": 20, "seed": 0, "model": "model.saem",
              "loss_csv": "loss.csv"},
    "index": {"manifest": None, "model": "model.saem", "index": "index.saei",
              "binarize": False},
    "query": {"model": "model.saem", "index": "index.saei", "image": None,
              "k": 5},
    "evaluate": {"manifest": None, "model": "model.saem",
                 "index": "index.saei", "taxonomy": None,
                 "report": "report.csv", "summary": "summary.json"},
    "stats": {"manifest": None, "out": None},
}

REQUIRED = {
    "synth": ["out"],
    "train": ["manifest", "dims"],
    "index": ["manifest"],
    "query": ["image"],
    "evaluate": ["manifest", "taxonomy"],
    "stats": ["manifest"],
}


def _resolve(ns: argparse.Namespace, command: str) -> dict:
    defaults = DEFAULTS[command]
    merged = dict(defaults)
    if getattr(ns, "config", None) is not None:
        with open(ns.config, "rb") as fh:
            file_values = tomllib.load(fh)
        unknown = sorted(set(file_values) - set(defaults))
        if unknown:
            raise CliUsageError(
                f"{ns.config}: unknown config keys: {', '.join(unknown)}")
        merged.update(file_values)
    for key in defaults:
        flag_value = getattr(ns, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    missing = [k for k in REQUIRED[command] if merged[k] is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise CliUsageError(f"missing required options: {flags}")
    print("config: " + " ".join(f"{k}={merged[k]}" for k in sorted(merged)))
    return merged


def _parse_dims(text) -> list[int]:
    if isinstance(text, list):
        dims = [int(d) for d in text]
    else:
        try:
            dims = [int(part) for part in str(text).split(",")]
        except ValueError:
            raise CliUsageError(f"bad --dims value {text!r}, "
                                "expected comma-separated integers") from None
    if len(dims) < 2:
        raise CliUsageError(
            f"--dims needs at least 2 comma-separated values, got {text!r}")
    return dims


def _train_split_vectors(manifest):
    records = dataset.load_manifest(manifest)
    train_records = dataset.split_records(records, "train")
    if not train_records:
        raise CliUsageError(f"{manifest}: no train records")
    return records, train_records, dataset.load_vectors(train_records)


def cmd_synth(ns) -> int:
    cfg = _resolve(ns, "synth")
    manifest, taxonomy = dataset.generate_synthetic_corpus(
        cfg["out"], cfg["seed"], cfg["train"], cfg["test"], cfg["classes"])
    print(f"wrote {manifest} ({cfg['train'] + cfg['test']} records) "
          f"and {taxonomy}")
    return 0


def cmd_train(ns) -> int:
    cfg = _resolve(ns, "train")
    dims = _parse_dims(cfg["dims"])
    _, _, vectors = _train_split_vectors(cfg["manifest"])
    config = TrainConfig(epochs=cfg["epochs"], learning_rate=cfg["lr"],
                         batch_size=cfg["batch_size"], rng_seed=cfg["seed"])
    stack, reports = stacked.train_stack(vectors, dims, config)
    loss_lines = ["layer,epoch,loss"]
    for layer_k, report in enumerate(reports):
        for epoch_k, loss in enumerate(report.epoch_losses, start=1):
            print(f"layer {layer_k} epoch {epoch_k}/{cfg['epochs']} "
                  f"loss {loss:.6f}")
        loss_lines.extend(f"{layer_k},{e + 1},{loss!r}"
                          for e, loss in enumerate(report.epoch_losses))
    stacked.save_model(stack, cfg["model"])
    Path(cfg["loss_csv"]).write_text("\n".join(loss_lines) + "\n")
    print(f"model: {stack.architecture} -> {cfg['model']}")
    return 0


def cmd_index(ns) -> int:
    cfg = _resolve(ns, "index")
    stack = stacked.load_model(cfg["model"])
    _, train_records, vectors = _train_split_vectors(cfg["manifest"])
    features = stacked.encode_features_batch(stack, vectors)
    if cfg["binarize"]:
        features = search.binarize(features)
    records = [search.FeatureRecord(r.record_id, r.code, features[i],
                                    binarized=cfg["binarize"])
               for i, r in enumerate(train_records)]
    index = search.build_index(records)
    search.save_index(index, cfg["index"])
    print(f"indexed {len(index)} records dim {index.dim} -> {cfg['index']}")
    return 0


def cmd_query(ns) -> int:
    cfg = _resolve(ns, "query")
    stack = stacked.load_model(cfg["model"])
    index = search.load_index(cfg["index"])
    vector = dataset.load_vector(cfg["image"])
    features = stacked.encode_features(stack, vector)
    if index.binarized:
        features = search.binarize(features)
    result = search.knn(index, features, cfg["k"])
    print("rank  record_id  code  distance")
    for rank, hit in enumerate(result, start=1):
        print(f"{rank:>4}  {hit.record_id}  {hit.code}  {hit.distance:.6f}")
    return 0


def cmd_evaluate(ns) -> int:
    cfg = _resolve(ns, "evaluate")
    stack = stacked.load_model(cfg["model"])
    index = search.load_index(cfg["index"])
    taxonomy = Taxonomy.from_string(cfg["taxonomy"])
    records, _, train_vectors = _train_split_vectors(cfg["manifest"])
    test_records = dataset.split_records(records, "test")
    if not test_records:
        raise CliUsageError(f"{cfg['manifest']}: no test records")
    report = evaluation.evaluate(stack, index, test_records, taxonomy,
                                 train_vectors=train_vectors)
    evaluation.report_csv(report, cfg["report"])
    Path(cfg["summary"]).write_text(evaluation.summary_json(report))
    print(f"total {report.total_score!r} percentage "
          f"{report.error_percentage!r} n_test {report.n_test}")
    print(f"report -> {cfg['report']}, summary -> {cfg['summary']}")
    return 0


def cmd_stats(ns) -> int:
    cfg = _resolve(ns, "stats")
    records = dataset.load_manifest(cfg["manifest"])
    text = dataset.stats_csv(dataset.corpus_stats(records))
    if cfg["out"] is None:
        sys.stdout.write(text)
    else:
        Path(cfg["out"]).write_text(text)
        print(f"stats -> {cfg['out']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xraysearch",
        description="Train image autoencoders, index features, and search "
                    "by visual similarity.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML file with option defaults")
        return p

    p = add("synth", "generate a deterministic labeled synthetic corpus")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--train", type=int, help="training image count")
    p.add_argument("--test", type=int, help="test image count")
    p.add_argument("--classes", type=int, help="number of classes")

    p = add("train", "train a stacked encoder on the train split")
    p.add_argument("--manifest")
    p.add_argument("--dims", help="comma-separated layer sizes, e.g. 1024,600,500,260")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--model", help="model file to write")
    p.add_argument("--loss-csv", help="per-epoch loss CSV to write")

    p = add("index", "encode the train split and persist the feature index")
    p.add_argument("--manifest")
    p.add_argument("--model")
    p.add_argument("--index", help="index file to write")
    p.add_argument("--binarize", action=argparse.BooleanOptionalAction)

    p = add("query", "rank indexed records by similarity to one image")
    p.add_argument("--model")
    p.add_argument("--index")
    p.add_argument("--image", help="query image file")
    p.add_argument("-k", type=int, help="number of neighbors to print")

    p = add("evaluate", "score 1-NN retrieval of the test split")
    p.add_argument("--manifest")
    p.add_argument("--model")
    p.add_argument("--index")
    p.add_argument("--taxonomy", help="taxonomy file path or uniform:B")
    p.add_argument("--report", help="per-query report CSV to write")
    p.add_argument("--summary", help="summary JSON to write")

    p = add("stats", "per-split class distribution of a manifest")
    p.add_argument("--manifest")
    p.add_argument("--out", help="CSV to write (default: stdout)")

    return parser


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "index": cmd_index,
    "query": cmd_query,
    "evaluate": cmd_evaluate,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return COMMANDS[ns.command](ns)
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except XraySearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
