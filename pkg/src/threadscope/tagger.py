"""Averaged perceptron BILOU sequence tagger with greedy constrained
decoding, span-level evaluation, and corpus-scale entity counting.

Training knobs mirror the usual neural recipe: iterations are epochs, the
batch size compounds geometrically between a min and max each epoch, and
dropout (applied to update features, never at prediction) decays linearly
across epochs.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyTrainingSetError
from .nerdata import AnnotatedSentence, O_TAG, Span, bilou_to_spans, parse_tag
from . import textprep

TEMPLATES_VERSION = "v1"
MODEL_VERSION = 1

START_WORD = "<s>"
END_WORD = "</s>"


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 30
    batch_min: int = 4
    batch_max: int = 32
    batch_growth: float = 1.001
    dropout_start: float = 0.5
    dropout_end: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.batch_min < 1 or self.batch_max < self.batch_min:
            raise ValueError("need 1 <= batch_min <= batch_max")
        if self.batch_growth <= 1:
            raise ValueError("batch_growth must exceed 1")
        for rate in (self.dropout_start, self.dropout_end):
            if not 0 <= rate < 1:
                raise ValueError("dropout rates must lie in [0, 1)")

    def dropout_at(self, iteration: int) -> float:
        if self.iterations == 1:
            return self.dropout_start
        span = self.dropout_start - self.dropout_end
        return self.dropout_start - span * iteration / (self.iterations - 1)

    def batch_sizes(self, n: int) -> list[int]:
        """Batch sizes covering n sentences, compounding from batch_min."""
        sizes: list[int] = []
        j = 0
        while n > 0:
            size = int(min(self.batch_min * self.batch_growth**j, self.batch_max))
            size = max(1, min(size, n))
            sizes.append(size)
            n -= size
            j += 1
        return sizes


@dataclass
class TaggerModel:
    labels: list[str]
    templates: str = TEMPLATES_VERSION
    weights: dict[str, dict[str, float]] = field(default_factory=dict)


def word_shape(word: str) -> str:
    return "".join(
        "X" if ch.isupper() else "x" if ch.islower() else "d" if ch.isdigit() else ch
        for ch in word
    )


def extract_features(
    tokens: Sequence[str], position: int, prev_tag: str
) -> list[str]:
    """Deterministic feature ids for one position given the previous tag."""
    word = tokens[position]
    lower = word.lower()
    prev_word = tokens[position - 1].lower() if position > 0 else START_WORD
    next_word = (
        tokens[position + 1].lower() if position + 1 < len(tokens) else END_WORD
    )
    features = [
        "bias",
        f"w={lower}",
        f"shape={word_shape(word)}",
        f"prev={prev_word}",
        f"next={next_word}",
        f"ptag={prev_tag}",
    ]
    for k in (1, 2, 3):
        if len(lower) >= k:
            features.append(f"pre{k}={lower[:k]}")
            features.append(f"suf{k}={lower[-k:]}")
    return features


def _allowed_labels(labels: Sequence[str], prev_tag: str, is_last: bool) -> list[str]:
    prev_prefix, prev_cat = parse_tag(prev_tag)
    if prev_prefix in ("B", "I"):
        # inside an entity: only continue or close it
        if is_last:
            return [f"L-{prev_cat}"]
        return [f"I-{prev_cat}", f"L-{prev_cat}"]
    if is_last:
        return [l for l in labels if l == O_TAG or l.startswith("U-")]
    return [
        l for l in labels if l == O_TAG or l.startswith(("B-", "U-"))
    ]


def _score(weights: dict[str, dict[str, float]], features: Sequence[str], label: str) -> float:
    total = 0.0
    for feature in features:
        row = weights.get(feature)
        if row is not None:
            total += row.get(label, 0.0)
    return total


def _decode(
    weights: dict[str, dict[str, float]],
    labels: Sequence[str],
    tokens: Sequence[str],
) -> tuple[list[str], list[list[str]]]:
    """Greedy constrained decode; returns tags and per-position features."""
    tags: list[str] = []
    feature_lists: list[list[str]] = []
    prev = O_TAG
    n = len(tokens)
    for i in range(n):
        features = extract_features(tokens, i, prev)
        candidates = _allowed_labels(labels, prev, i == n - 1)
        best = candidates[0]
        best_score = _score(weights, features, best)
        for label in candidates[1:]:
            score = _score(weights, features, label)
            if score > best_score:
                best, best_score = label, score
        tags.append(best)
        feature_lists.append(features)
        prev = best
    return tags, feature_lists


def train_tagger(
    train: Sequence[AnnotatedSentence], config: TrainConfig
) -> TaggerModel:
    """Averaged perceptron training over seeded shuffles and compounding
    batches; updates are collected per batch and applied at batch end."""
    if not train:
        raise EmptyTrainingSetError("no training sentences")
    categories = sorted(
        {
            parse_tag(tag)[1]
            for sentence in train
            for tag in sentence.tags
            if tag != O_TAG
        }
    )
    labels = [O_TAG] + [f"{p}-{c}" for c in categories for p in ("B", "I", "L", "U")]

    weights: dict[str, dict[str, float]] = {}
    totals: dict[str, dict[str, float]] = {}
    stamps: dict[str, dict[str, int]] = {}
    rng = random.Random(config.seed)
    order = list(range(len(train)))
    step = 0

    def apply(feature: str, label: str, delta: float) -> None:
        row = weights.setdefault(feature, {})
        trow = totals.setdefault(feature, {})
        srow = stamps.setdefault(feature, {})
        trow[label] = trow.get(label, 0.0) + row.get(label, 0.0) * (
            step - srow.get(label, 0)
        )
        srow[label] = step
        row[label] = row.get(label, 0.0) + delta

    for iteration in range(config.iterations):
        rng.shuffle(order)
        dropout = config.dropout_at(iteration)
        cursor = 0
        for size in config.batch_sizes(len(order)):
            batch = order[cursor : cursor + size]
            cursor += size
            updates: list[tuple[list[str], str, str]] = []
            for index in batch:
                sentence = train[index]
                predicted, feature_lists = _decode(
                    weights, labels, sentence.tokens
                )
                for features, gold, pred in zip(
                    feature_lists, sentence.tags, predicted
                ):
                    if gold != pred:
                        updates.append((features, gold, pred))
            step += 1
            for features, gold, pred in updates:
                for feature in features:
                    if dropout > 0 and rng.random() < dropout:
                        continue
                    apply(feature, gold, +1.0)
                    apply(feature, pred, -1.0)

    averaged: dict[str, dict[str, float]] = {}
    if step > 0:
        for feature, row in weights.items():
            for label, value in row.items():
                total = totals[feature].get(label, 0.0) + value * (
                    step + 1 - stamps[feature].get(label, 0)
                )
                mean = total / step
                if mean != 0.0:
                    averaged.setdefault(feature, {})[label] = mean
    return TaggerModel(labels=labels, weights=averaged)


def tag_tokens(model: TaggerModel, tokens: Sequence[str]) -> list[str]:
    """Greedy left-to-right decode; output is always strictly BILOU-valid."""
    tags, _ = _decode(model.weights, model.labels, tokens)
    return tags


@dataclass(frozen=True)
class Scores:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def scores_from_counts(tp: int, fp: int, fn: int) -> Scores:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return Scores(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class EvalReport:
    per_category: dict[str, Scores]
    micro: Scores


def compare_spans(
    gold: Sequence[Sequence[Span]], predicted: Sequence[Sequence[Span]]
) -> EvalReport:
    """Span-level exact-match counts per category plus micro totals."""
    counts: dict[str, list[int]] = {}
    for gold_spans, pred_spans in zip(gold, predicted):
        gold_set = set(gold_spans)
        pred_set = set(pred_spans)
        for span in gold_set | pred_set:
            row = counts.setdefault(span.category, [0, 0, 0])
            in_gold = span in gold_set
            in_pred = span in pred_set
            if in_gold and in_pred:
                row[0] += 1
            elif in_pred:
                row[1] += 1
            else:
                row[2] += 1
    per_category = {
        category: scores_from_counts(*counts[category])
        for category in sorted(counts)
    }
    micro = scores_from_counts(
        sum(s.tp for s in per_category.values()),
        sum(s.fp for s in per_category.values()),
        sum(s.fn for s in per_category.values()),
    )
    return EvalReport(per_category=per_category, micro=micro)


def evaluate_tagger(
    model: TaggerModel, eval_set: Sequence[AnnotatedSentence]
) -> EvalReport:
    gold = [bilou_to_spans(sentence.tags) for sentence in eval_set]
    predicted = [
        bilou_to_spans(tag_tokens(model, sentence.tokens))
        for sentence in eval_set
    ]
    return compare_spans(gold, predicted)


def save_model(model: TaggerModel, path: str | Path) -> None:
    payload = {
        "version": MODEL_VERSION,
        "labels": model.labels,
        "templates": model.templates,
        "weights": model.weights,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")


def load_model(path: str | Path) -> TaggerModel:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    return TaggerModel(
        labels=list(payload["labels"]),
        templates=payload["templates"],
        weights={
            feature: {label: float(v) for label, v in row.items()}
            for feature, row in payload["weights"].items()
        },
    )


@dataclass(frozen=True)
class EntityCount:
    category: str
    name: str
    count: int
    share: float


def normalize_entity(
    tokens: Sequence[str], rules: textprep.LemmaRules | None = None
) -> str:
    """Merge surface variants: underscores to spaces, lowercase, per-token
    lemmatization, single-space join."""
    words = " ".join(tokens).replace("_", " ").split()
    tagged = textprep.pos_tag(words)
    return " ".join(textprep.lemmatize(token, rules) for token in tagged)


def detect_document_entities(
    model: TaggerModel,
    document,
    rules: textprep.LemmaRules | None = None,
) -> list[tuple[str, str]]:
    """Normalized (category, name) mentions from one Document's title and
    comment bodies, in reading order."""
    mentions: list[tuple[str, str]] = []
    parts = [document.title, *document.comment_bodies]
    for part in parts:
        stripped = textprep.strip_urls(part)
        for sentence in textprep.split_sentences(stripped):
            tokens = textprep.tokenize(sentence)
            if not tokens:
                continue
            tags = tag_tokens(model, tokens)
            for span in bilou_to_spans(tags):
                name = normalize_entity(tokens[span.start : span.end], rules)
                if name:
                    mentions.append((span.category, name))
    return mentions


def detect_and_count_entities(
    model: TaggerModel,
    documents: Iterable,
    rules: textprep.LemmaRules | None = None,
) -> dict[str, list[EntityCount]]:
    """Tag every Document (one at a time), merge variant surface forms, and
    count mentions per subreddit and category; share is the fraction of the
    category total within the subreddit."""
    counts: dict[str, dict[str, dict[str, int]]] = {}
    for document in documents:
        per_subreddit = counts.setdefault(document.subreddit, {})
        for category, name in detect_document_entities(model, document, rules):
            per_category = per_subreddit.setdefault(category, {})
            per_category[name] = per_category.get(name, 0) + 1

    out: dict[str, list[EntityCount]] = {}
    for subreddit in sorted(counts):
        rows: list[EntityCount] = []
        for category in sorted(counts[subreddit]):
            names = counts[subreddit][category]
            total = sum(names.values())
            for name, count in sorted(names.items(), key=lambda kv: (-kv[1], kv[0])):
                rows.append(
                    EntityCount(
                        category=category,
                        name=name,
                        count=count,
                        share=count / total,
                    )
                )
        out[subreddit] = rows
    return out
