"""Command line front end: one binary, one subcommand per pipeline stage.

Subcommands: ingest, stats, preprocess, ner-build, ner-train, ner-eval,
ner-tag, topics, topics-monthly, sentiment, report, and replay.  Exit
codes: 0 success, 1 usage error, 2 data error.

Every artifact-writing run records a manifest (subcommand, effective
parameters, input digests, seeds) before its outputs, so a finished tree
always carries the run record that produced it.  Output locations and
--threads are not recorded: they must not change the emitted bytes.
`replay` re-executes a manifest into a fresh output location after
checking that the recorded inputs are unchanged.

Values merge as flags > config file > built-in defaults; the manifest
holds the merged result.  `--threads N` is accepted where work is
per-document; N=1 is the reference behavior and parallel runs must
produce the same bytes, so the sequential path is always used.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Callable, Mapping, Sequence

from . import corpus, manifest, nerdata, report, sentiment, tagger, textprep, topics
from .errors import FormatError, ThreadscopeError

PROG = "threadscope"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the contract here is 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


@dataclass(frozen=True)
class Param:
    """One flag: how to parse it, whether it names an input file to
    digest, and whether it belongs in the manifest."""

    flag: str
    kind: str = "str"  # str | int | float | date | csv | flag | choice
    default: object = None
    required: bool = False
    choices: tuple[str, ...] = ()
    help: str = ""
    is_input: bool = False
    recorded: bool = True

    @property
    def dest(self) -> str:
        return self.flag.replace("-", "_")


def _csv(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def _add_to_parser(parser: argparse.ArgumentParser, param: Param) -> None:
    name = f"--{param.flag}"
    if param.kind == "flag":
        parser.add_argument(name, action="store_true", default=False, help=param.help)
    elif param.kind == "choice":
        parser.add_argument(name, choices=param.choices, default=None, help=param.help)
    elif param.kind == "csv":
        parser.add_argument(name, type=_csv, default=None, help=param.help)
    else:
        types: dict[str, Callable] = {
            "str": str,
            "int": int,
            "float": float,
            "date": date.fromisoformat,
        }
        parser.add_argument(name, type=types[param.kind], default=None, help=param.help)


def _coerce(param: Param, value: object) -> object:
    """Bring a config-file value to the same type a flag would produce."""
    try:
        if param.kind == "int":
            return int(value)  # type: ignore[arg-type]
        if param.kind == "float":
            return float(value)  # type: ignore[arg-type]
        if param.kind == "date":
            return date.fromisoformat(str(value))
        if param.kind == "csv":
            if isinstance(value, list):
                return [str(item) for item in value]
            return _csv(str(value))
        if param.kind == "flag":
            return bool(value)
        if param.kind == "choice":
            if str(value) not in param.choices:
                raise ValueError(f"must be one of {', '.join(param.choices)}")
            return str(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise _UsageError(f"config value for {param.flag!r}: {exc}") from exc


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise _UsageError(f"config file {path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise _UsageError(f"config file {path}: expected a JSON object")
    return payload


def _merge(params: tuple[Param, ...], cli: Mapping, config: Mapping) -> dict:
    known = {param.flag for param in params}
    unknown = set(config) - known
    if unknown:
        raise _UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged: dict = {}
    for param in params:
        value = cli.get(param.dest)
        if param.kind == "flag":
            value = bool(value) or bool(config.get(param.flag, False))
        elif value is None:
            if param.flag in config:
                value = _coerce(param, config[param.flag])
            else:
                value = param.default
        if param.required and value is None:
            raise _UsageError(f"the following argument is required: --{param.flag}")
        merged[param.dest] = value
    if merged.get("threads") is not None and merged["threads"] < 1:
        raise _UsageError("--threads must be at least 1")
    return merged


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    params: tuple[Param, ...]
    handler: Callable[[dict, manifest.RunManifest], int]
    out_flag: str = "out"
    finalize: Callable[[dict], None] | None = None


def _record_manifest(command: Command, merged: Mapping) -> manifest.RunManifest:
    params: dict = {}
    inputs: dict = {}
    seeds: dict = {}
    for param in command.params:
        if not param.recorded or param.flag == command.out_flag:
            continue
        value = merged[param.dest]
        params[param.flag] = value.isoformat() if isinstance(value, date) else value
        if param.is_input and value is not None:
            inputs[param.flag] = value
        if param.flag == "seed" and value is not None:
            seeds["seed"] = value
    return manifest.build_manifest(command.name, params, inputs, seeds)


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def _write_file(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _resolve_corpus_id(merged: dict) -> None:
    if not merged.get("corpus_id"):
        merged["corpus_id"] = Path(merged["docs"]).stem


# ---------------------------------------------------------------- handlers


def _cmd_ingest(p: dict, mani: manifest.RunManifest) -> int:
    on_error = "skip" if p["skip_bad_records"] else "raise"
    records = corpus.parse_dump(p["dump"], p["schema"], on_error=on_error)
    spec = corpus.FilterSpec(
        keywords=tuple(p["keywords"]),
        date_from=p["from"],
        date_to=p["to"],
        subreddits=tuple(p["subreddits"] or ()),
    )
    matched = corpus.filter_records(records, spec)
    documents = corpus.assemble_documents(records, matched, spec=spec)
    sentences: list[str] = []
    for doc in documents:
        for body in doc.comment_bodies:
            sentences.extend(textprep.split_sentences(textprep.strip_urls(body)))
    sentences = corpus.dedup_sentences(sentences)
    stats = corpus.corpus_stats(documents)

    out = Path(p["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest.write_manifest(mani, out / manifest.MANIFEST_NAME)
    corpus.write_documents(documents, out / "documents.jsonl")
    body = "\n".join(sentences) + "\n" if sentences else ""
    _write_file(out / "sentences.txt", body)
    _write_file(out / "stats.tsv", corpus.stats_table(stats))
    return 0


def _cmd_stats(p: dict, mani: manifest.RunManifest) -> int:
    documents = corpus.read_documents(p["docs"])
    table = corpus.stats_table(corpus.corpus_stats(documents))
    if p["out"]:
        out = Path(p["out"])
        out.mkdir(parents=True, exist_ok=True)
        manifest.write_manifest(mani, out / manifest.MANIFEST_NAME)
        _write_file(out / "stats.tsv", table)
    print(table, end="")
    return 0


def _cmd_preprocess(p: dict, mani: manifest.RunManifest) -> int:
    documents = corpus.read_documents(p["in"])
    config = None
    if p["stages"]:
        config = textprep.PipelineConfig(stages=tuple(p["stages"]))
    stoplist = textprep.load_stopwords(p["stoplist"]) if p["stoplist"] else None
    for doc in documents:
        textprep.preprocess_document(doc, config=config, stoplist=stoplist)
    out = Path(p["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest.write_manifest(mani, _sidecar(out))
    corpus.write_documents(documents, out)
    return 0


def _cmd_ner_build(p: dict, mani: manifest.RunManifest) -> int:
    text = Path(p["sentences"]).read_text(encoding="utf-8")
    sentences = [line for line in text.splitlines() if line.strip()]
    spec = nerdata.load_keyword_spec(p["keywords"], cap=p["cap"], match_mode=p["match"])
    train, eval_set = nerdata.build_ner_dataset(
        sentences, spec, split_ratio=p["split"], seed=p["seed"]
    )
    out = Path(p["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest.write_manifest(mani, out / manifest.MANIFEST_NAME)
    nerdata.write_annotations(train, out / "train.tsv")
    nerdata.write_annotations(eval_set, out / "eval.tsv")
    _write_file(
        out / "train_labels.tsv", nerdata.label_counts_table(nerdata.count_labels(train))
    )
    _write_file(
        out / "eval_labels.tsv",
        nerdata.label_counts_table(nerdata.count_labels(eval_set)),
    )
    return 0


def _parse_dropout(raw: str) -> tuple[float, float]:
    start, _, end = raw.partition(":")
    try:
        first = float(start)
        second = float(end) if end else first
    except ValueError as exc:
        raise _UsageError(f"--dropout expects s or s:e, got {raw!r}") from exc
    return first, second


def _cmd_ner_train(p: dict, mani: manifest.RunManifest) -> int:
    dropout_start, dropout_end = _parse_dropout(p["dropout"])
    config = tagger.TrainConfig(
        iterations=p["iters"],
        batch_min=p["batch_min"],
        batch_max=p["batch_max"],
        batch_growth=p["batch_growth"],
        dropout_start=dropout_start,
        dropout_end=dropout_end,
        seed=p["seed"],
    )
    train = nerdata.read_annotations(p["train"])
    model = tagger.train_tagger(train, config)
    out = Path(p["model"])
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest.write_manifest(mani, _sidecar(out))
    tagger.save_model(model, out)
    return 0


def _eval_table(result: tagger.EvalReport) -> str:
    lines = ["category\tprecision\trecall\tf1"]
    for category in sorted(result.per_category):
        scores = result.per_category[category]
        lines.append(
            f"{category}\t{scores.precision:.4f}\t{scores.recall:.4f}\t{scores.f1:.4f}"
        )
    micro = result.micro
    lines.append(f"micro\t{micro.precision:.4f}\t{micro.recall:.4f}\t{micro.f1:.4f}")
    return "\n".join(lines) + "\n"


def _cmd_ner_eval(p: dict, mani: manifest.RunManifest) -> int:
    model = tagger.load_model(p["model"])
    eval_set = nerdata.read_annotations(p["eval"])
    table = _eval_table(tagger.evaluate_tagger(model, eval_set))
    if p["out"]:
        out = Path(p["out"])
        out.mkdir(parents=True, exist_ok=True)
        manifest.write_manifest(mani, out / manifest.MANIFEST_NAME)
        _write_file(out / "eval.tsv", table)
    print(table, end="")
    return 0


def _cmd_ner_tag(p: dict, mani: manifest.RunManifest) -> int:
    model = tagger.load_model(p["model"])
    documents = corpus.read_documents(p["docs"])
    lines = ["post_id\tsubreddit\tcreated_utc\tcategory\tname"]
    for doc in documents:
        for category, name in tagger.detect_document_entities(model, doc):
            lines.append(
                f"{doc.post_id}\t{doc.subreddit}\t{doc.created_utc}\t{category}\t{name}"
            )
    out = Path(p["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest.write_manifest(mani, _sidecar(out))
    _write_file(out, "\n".join(lines) + "\n")
    return 0


def _cmd_topics(p: dict, mani: manifest.RunManifest) -> int:
    documents = corpus.read_documents(p["docs"])
    vocab, matrix = topics.build_vocabulary(
        [doc.cleaned_text for doc in documents], max_df=p["max_df"], min_df=p["min_df"]
    )
    config = topics.LdaConfig(
        k=p["k"],
        alpha=p["alpha"],
        eta=p["eta"],
        tau0=p["offset"],
        kappa=p["kappa"],
        batch_size=p["batch_size"],
        epochs=p["epochs"],
        seed=p["seed"],
        top_n=p["top"],
    )
    out = Path(p["out"])
    target = out / p["corpus_id"] / "topics"
    if target.exists() and not p["force"]:
        raise FileExistsError(f"{target} already exists; pass --force to overwrite")
    model = topics.fit_lda(matrix, config)
    model.vocab = vocab
    assignments, frequencies = topics.assign_topics(model, documents)
    out.mkdir(parents=True, exist_ok=True)
    manifest.write_manifest(mani, out / manifest.MANIFEST_NAME)
    exported = report.export_topic_artifacts(
        model, assignments, frequencies, out, p["corpus_id"], force=True
    )
    topics.save_topic_model(model, exported / "model.json")
    return 0


def _cmd_topics_monthly(p: dict, mani: manifest.RunManifest) -> int:
    documents = corpus.read_documents(p["docs"])
    config = topics.LdaConfig(
        k=2,
        batch_size=p["batch_size"],
        epochs=p["epochs"],
        seed=p["seed"],
        top_n=p["top"],
    )
    results = topics.monthly_side_topics(
        documents,
        config,
        max_df=p["max_df"],
        min_df=p["min_df"],
        min_docs=p["min_docs"],
    )
    out = Path(p["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest.write_manifest(mani, out / manifest.MANIFEST_NAME)
    rows = ["month\ttopic\trank\tterm\tweight"]
    skipped = ["month\treason"]
    for month in results:
        if month.skipped:
            skipped.append(f"{month.month}\t{month.reason}")
            continue
        for topic_id, pairs in enumerate(month.topics):
            for rank, (term, weight) in enumerate(pairs, start=1):
                rows.append(f"{month.month}\t{topic_id}\t{rank}\t{term}\t{weight:.6f}")
    base = out / p["corpus_id"] / "monthly"
    _write_file(base / "side_topics.tsv", "\n".join(rows) + "\n")
    _write_file(base / "skipped.tsv", "\n".join(skipped) + "\n")
    return 0


def _cmd_sentiment(p: dict, mani: manifest.RunManifest) -> int:
    documents = corpus.read_documents(p["docs"])
    lexicon = sentiment.load_lexicon(p["lexicon"])
    result = sentiment.analyze_entity_sentences(
        documents, p["entity"], lexicon, min_tokens=p["min_tokens"]
    )
    table = (
        "entity\tn_pos\tn_neg\tn_neu\tmean_compound\n"
        f"{result.entity}\t{result.n_pos}\t{result.n_neg}\t{result.n_neu}\t"
        f"{result.mean_compound:.6f}\n"
    )
    out = Path(p["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest.write_manifest(mani, _sidecar(out))
    _write_file(out, table)
    print(table, end="")
    return 0


def _read_mentions(path: str) -> list[tuple[str, str, int, str, str]]:
    rows: list[tuple[str, str, int, str, str]] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if line_no == 1 or not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 5:
                raise FormatError(line_no, "expected 5 tab-separated columns")
            try:
                created = int(parts[2])
            except ValueError as exc:
                raise FormatError(line_no, f"bad created_utc {parts[2]!r}") from exc
            rows.append((parts[0], parts[1], created, parts[3], parts[4]))
    return rows


def _top_entity_per_category(
    counts: Mapping[str, Sequence[tagger.EntityCount]],
) -> list[str]:
    totals: dict[str, dict[str, int]] = {}
    for rows in counts.values():
        for row in rows:
            per = totals.setdefault(row.category, {})
            per[row.name] = per.get(row.name, 0) + row.count
    picks: list[str] = []
    for category in sorted(totals):
        names = totals[category]
        best = sorted(names.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        picks.append(best)
    return picks


def _cmd_report(p: dict, mani: manifest.RunManifest) -> int:
    documents = corpus.read_documents(p["docs"])
    out = Path(p["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest.write_manifest(mani, out / manifest.MANIFEST_NAME)
    base = out / p["corpus_id"]

    buckets = report.weekly_post_counts(documents, p["from"], p["to"])
    _write_file(base / "weekly" / "weekly_posts.tsv", report.weekly_table(buckets))

    if p["mentions"]:
        mention_rows = _read_mentions(p["mentions"])
        counts = report.counts_from_mentions(
            [(row[1], row[3], row[4]) for row in mention_rows]
        )
        tables = report.entity_report(counts, truncate=p["truncate"])
        _write_file(base / "entities" / "entity_counts.tsv", report.entity_table(tables))
        _write_file(
            base / "entities" / "entity_totals.tsv", report.entity_totals_table(tables)
        )
        entities = p["entities"] or _top_entity_per_category(counts)
        doc_mentions: dict[str, list[tuple[str, str]]] = {}
        for post_id, _, _, category, name in mention_rows:
            doc_mentions.setdefault(post_id, []).append((category, name))
        series = report.monthly_entity_trends(documents, entities, doc_mentions)
        _write_file(base / "monthly" / "entity_trends.tsv", report.trends_table(series))
    return 0


def _argv_from_params(params: Mapping) -> list[str]:
    argv: list[str] = []
    for flag in sorted(params):
        value = params[flag]
        if value is None or value is False:
            continue
        if value is True:
            argv.append(f"--{flag}")
        elif isinstance(value, list):
            argv.extend([f"--{flag}", ",".join(str(item) for item in value)])
        else:
            argv.extend([f"--{flag}", str(value)])
    return argv


def _cmd_replay(p: dict, mani: manifest.RunManifest) -> int:
    recorded = manifest.read_manifest(p["manifest"])
    problems = manifest.verify_inputs(recorded)
    if problems:
        for problem in problems:
            print(f"{PROG} replay: error: {problem}", file=sys.stderr)
        return 2
    if recorded.command not in COMMANDS or recorded.command == "replay":
        print(
            f"{PROG} replay: error: manifest names unknown command "
            f"{recorded.command!r}",
            file=sys.stderr,
        )
        return 2
    out_flag = COMMANDS[recorded.command].out_flag
    argv = [recorded.command, *_argv_from_params(recorded.params)]
    argv.extend([f"--{out_flag}", p["out"]])
    return run(argv)


# ------------------------------------------------------------- commands

_THREADS = Param("threads", kind="int", default=1, recorded=False, help="worker count; 1 is the reference")

COMMANDS: dict[str, Command] = {
    command.name: command
    for command in (
        Command(
            name="ingest",
            help="parse a dump, filter threads, and write the document corpus",
            params=(
                Param("dump", required=True, is_input=True, help="newline-delimited dump file"),
                Param("schema", kind="choice", choices=corpus.SCHEMAS, required=True, help="dump record layout"),
                Param("keywords", kind="csv", required=True, help="comma-separated filter keywords"),
                Param("from", kind="date", required=True, help="start date, YYYY-MM-DD"),
                Param("to", kind="date", required=True, help="end date, YYYY-MM-DD"),
                Param("subreddits", kind="csv", help="restrict to these subreddits"),
                Param("skip-bad-records", kind="flag", help="log and skip malformed dump lines"),
                Param("out", required=True, recorded=False, help="output directory"),
            ),
            handler=_cmd_ingest,
        ),
        Command(
            name="stats",
            help="print the per-subreddit corpus table",
            params=(
                Param("docs", required=True, is_input=True, help="documents file"),
                Param("out", recorded=False, help="also write stats.tsv here"),
            ),
            handler=_cmd_stats,
        ),
        Command(
            name="preprocess",
            help="run the cleaning pipeline over a documents file",
            params=(
                Param("in", required=True, is_input=True, help="documents file"),
                Param("stoplist", is_input=True, help="custom stopword file"),
                Param("stages", kind="csv", help="pipeline stages, in order"),
                Param("out", required=True, recorded=False, help="output documents file"),
            ),
            handler=_cmd_preprocess,
        ),
        Command(
            name="ner-build",
            help="extract keyword sentences into train/eval annotation files",
            params=(
                Param("sentences", required=True, is_input=True, help="one sentence per line"),
                Param("keywords", required=True, is_input=True, help="CATEGORY<TAB>keyword file"),
                Param("cap", kind="int", default=250, help="max sentences per keyword"),
                Param("split", kind="float", default=0.65, help="train fraction"),
                Param("seed", kind="int", default=0, help="shuffle seed"),
                Param("match", kind="choice", choices=(nerdata.PREFIX_MATCH, nerdata.SUBSTRING_MATCH), default=nerdata.PREFIX_MATCH, help="keyword match mode"),
                Param("out", required=True, recorded=False, help="output directory"),
            ),
            handler=_cmd_ner_build,
        ),
        Command(
            name="ner-train",
            help="train the averaged-perceptron tagger",
            params=(
                Param("train", required=True, is_input=True, help="annotation file"),
                Param("iters", kind="int", default=30, help="training epochs"),
                Param("batch-min", kind="int", default=4, help="first batch size"),
                Param("batch-max", kind="int", default=32, help="batch size ceiling"),
                Param("batch-growth", kind="float", default=1.001, help="per-batch compounding factor"),
                Param("dropout", default="0.5", help="feature dropout, s or s:e"),
                Param("seed", kind="int", default=0, help="shuffle/dropout seed"),
                Param("model", required=True, recorded=False, help="output model file"),
            ),
            handler=_cmd_ner_train,
            out_flag="model",
        ),
        Command(
            name="ner-eval",
            help="score a tagger on an annotation file",
            params=(
                Param("model", required=True, is_input=True, help="model file"),
                Param("eval", required=True, is_input=True, help="annotation file"),
                Param("out", recorded=False, help="also write eval.tsv here"),
            ),
            handler=_cmd_ner_eval,
        ),
        Command(
            name="ner-tag",
            help="detect entity mentions in a documents file",
            params=(
                Param("model", required=True, is_input=True, help="model file"),
                Param("docs", required=True, is_input=True, help="documents file"),
                _THREADS,
                Param("out", required=True, recorded=False, help="output mentions file"),
            ),
            handler=_cmd_ner_tag,
        ),
        Command(
            name="topics",
            help="fit the online topic model and export its artifacts",
            params=(
                Param("docs", required=True, is_input=True, help="preprocessed documents file"),
                Param("k", kind="int", required=True, help="number of topics"),
                Param("max-df", kind="float", default=0.90, help="document-frequency ceiling"),
                Param("min-df", kind="int", default=3, help="document-frequency floor"),
                Param("offset", kind="float", default=15.0, help="learning-rate offset"),
                Param("kappa", kind="float", default=0.7, help="learning-rate decay"),
                Param("alpha", kind="float", help="doc-topic prior; default 1/k"),
                Param("eta", kind="float", help="topic-word prior; default 1/k"),
                Param("batch-size", kind="int", default=128, help="minibatch size"),
                Param("epochs", kind="int", default=10, help="passes over the corpus"),
                Param("seed", kind="int", default=42, help="initialization/shuffle seed"),
                Param("top", kind="int", default=15, help="keywords per topic"),
                Param("corpus-id", help="artifact directory name; default: docs stem"),
                Param("force", kind="flag", recorded=False, help="overwrite an existing export"),
                _THREADS,
                Param("out", required=True, recorded=False, help="output directory"),
            ),
            handler=_cmd_topics,
            finalize=_resolve_corpus_id,
        ),
        Command(
            name="topics-monthly",
            help="fit a small side model per calendar month",
            params=(
                Param("docs", required=True, is_input=True, help="preprocessed documents file"),
                Param("max-df", kind="float", default=0.90, help="document-frequency ceiling"),
                Param("min-df", kind="int", default=3, help="document-frequency floor"),
                Param("min-docs", kind="int", default=5, help="skip months with fewer documents"),
                Param("batch-size", kind="int", default=128, help="minibatch size"),
                Param("epochs", kind="int", default=10, help="passes per month"),
                Param("seed", kind="int", default=42, help="initialization/shuffle seed"),
                Param("top", kind="int", default=15, help="keywords per topic"),
                Param("corpus-id", help="artifact directory name; default: docs stem"),
                Param("out", required=True, recorded=False, help="output directory"),
            ),
            handler=_cmd_topics_monthly,
            finalize=_resolve_corpus_id,
        ),
        Command(
            name="sentiment",
            help="score the sentences mentioning one entity",
            params=(
                Param("docs", required=True, is_input=True, help="documents file"),
                Param("entity", required=True, help="entity to search for"),
                Param("lexicon", is_input=True, help="token<TAB>valence file; default shipped"),
                Param("min-tokens", kind="int", default=3, help="drop shorter sentences"),
                Param("out", required=True, recorded=False, help="output report file"),
            ),
            handler=_cmd_sentiment,
        ),
        Command(
            name="report",
            help="write weekly, entity, and trend tables",
            params=(
                Param("docs", required=True, is_input=True, help="documents file"),
                Param("mentions", is_input=True, help="mentions file from ner-tag"),
                Param("entities", kind="csv", help="entities to trend; default: top per category"),
                Param("truncate", kind="flag", help="keep top 3 DIST / top 8 other rows"),
                Param("from", kind="date", help="report range start"),
                Param("to", kind="date", help="report range end"),
                Param("corpus-id", help="artifact directory name; default: docs stem"),
                Param("out", required=True, recorded=False, help="output directory"),
            ),
            handler=_cmd_report,
            finalize=_resolve_corpus_id,
        ),
        Command(
            name="replay",
            help="re-run a recorded manifest into a fresh output location",
            params=(
                Param("manifest", required=True, is_input=True, recorded=False, help="manifest file"),
                Param("out", required=True, recorded=False, help="new output location"),
            ),
            handler=_cmd_replay,
        ),
    )
}


def _build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description="Reddit thread analysis toolkit")
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    for command in COMMANDS.values():
        sub = subparsers.add_parser(command.name, help=command.help)
        for param in command.params:
            _add_to_parser(sub, param)
        sub.add_argument("--config", default=None, help="JSON file of flag defaults")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    command = COMMANDS[args.command]
    try:
        config = _load_config(vars(args).get("config"))
        merged = _merge(command.params, vars(args), config)
        if command.finalize is not None:
            command.finalize(merged)
        mani = _record_manifest(command, merged)
        return command.handler(merged, mani)
    except _UsageError as exc:
        print(f"{PROG} {command.name}: error: {exc}", file=sys.stderr)
        return 1
    except ThreadscopeError as exc:
        print(f"{PROG} {command.name}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"{PROG} {command.name}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
