"""Annotated NER dataset construction and the BILOU tag codec.

Tags are plain strings: "O" or "<prefix>-<category>" with prefix in BILU.
Spans use half-open token index ranges [start, end).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    EmptyResultError,
    FormatError,
    InvalidBilouError,
    OverlappingSpansError,
    SpanOutOfBoundsError,
)
from . import textprep

DEFAULT_CATEGORIES = ("DIST", "DIT", "PPE", "SYM", "TEST")

O_TAG = "O"
PREFIXES = ("B", "I", "L", "U")

PREFIX_MATCH = "prefix"
SUBSTRING_MATCH = "substring"


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    category: str

    def __post_init__(self) -> None:
        if self.start < 0 or self.start >= self.end:
            raise ValueError(f"bad span bounds [{self.start}, {self.end})")


@dataclass
class AnnotatedSentence:
    tokens: list[str]
    tags: list[str]

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags must have equal length")


@dataclass(frozen=True)
class KeywordSpec:
    """Per-category extraction keywords with a per-keyword sentence cap.

    ``match_mode`` is "prefix" (keyword word matches any token starting
    with it, so "mask" hits "masks" but not "unmask") or "substring".
    """

    by_category: dict[str, tuple[str, ...]]
    cap: int = 250
    match_mode: str = PREFIX_MATCH

    def __post_init__(self) -> None:
        if self.cap < 1:
            raise ValueError("cap must be >= 1")
        if self.match_mode not in (PREFIX_MATCH, SUBSTRING_MATCH):
            raise ValueError(f"unknown match_mode {self.match_mode!r}")
        for category, keywords in self.by_category.items():
            for kw in keywords:
                if kw != kw.lower():
                    raise ValueError(f"keyword {kw!r} must be lowercase")

    def all_keywords(self) -> list[str]:
        out: list[str] = []
        for keywords in self.by_category.values():
            out.extend(keywords)
        return out


def load_keyword_spec(
    path: str | Path, cap: int = 250, match_mode: str = PREFIX_MATCH
) -> KeywordSpec:
    """Read CATEGORY<TAB>keyword lines ('#' comments allowed)."""
    by_category: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2 or not parts[0].strip() or not parts[1].strip():
                raise FormatError(line_no, "expected CATEGORY<TAB>keyword")
            by_category.setdefault(parts[0].strip(), []).append(
                parts[1].strip().lower()
            )
    return KeywordSpec(
        by_category={c: tuple(kws) for c, kws in by_category.items()},
        cap=cap,
        match_mode=match_mode,
    )


def _word_matches(token: str, kw_word: str, mode: str) -> bool:
    if mode == PREFIX_MATCH:
        return token.startswith(kw_word)
    return kw_word in token


def _find_keyword(words: list[str], kw_words: list[str], mode: str, start: int = 0) -> int:
    """Index of the first occurrence of the keyword's word sequence in the
    lowercased whitespace tokens, or -1."""
    n, m = len(words), len(kw_words)
    for i in range(start, n - m + 1):
        if all(_word_matches(words[i + j], kw_words[j], mode) for j in range(m)):
            return i
    return -1


def sentence_matches(sentence: str, keyword: str, mode: str = PREFIX_MATCH) -> bool:
    words = sentence.lower().split()
    return _find_keyword(words, keyword.split(), mode) >= 0


def join_multiword_keywords(
    sentence: str, keywords: Sequence[str], mode: str = PREFIX_MATCH
) -> str:
    """Rewrite each occurrence of a multi-word keyword by joining the
    matched whitespace tokens with underscores; longer keywords win."""
    multi = sorted(
        (kw for kw in keywords if " " in kw), key=lambda kw: (-len(kw.split()), kw)
    )
    if not multi:
        return sentence
    chunks = sentence.split()
    lowered = [c.lower() for c in chunks]
    out: list[str] = []
    i = 0
    while i < len(chunks):
        joined = None
        for kw in multi:
            kw_words = kw.split()
            m = len(kw_words)
            if i + m <= len(chunks) and all(
                _word_matches(lowered[i + j], kw_words[j], mode) for j in range(m)
            ):
                joined = "_".join(chunks[i : i + m])
                i += m
                break
        if joined is None:
            out.append(chunks[i])
            i += 1
        else:
            out.append(joined)
    return " ".join(out)


def build_ner_dataset(
    sentences: Sequence[str],
    spec: KeywordSpec,
    split_ratio: float = 0.65,
    seed: int = 0,
) -> tuple[list[AnnotatedSentence], list[AnnotatedSentence]]:
    """Extract up to ``spec.cap`` sentences per keyword (keyword order, then
    corpus order), dedup, underscore-join multi-word keyword hits, tokenize
    with all-O tags, and split train/eval by a seeded shuffle."""
    if not 0 < split_ratio < 1:
        raise ValueError("split_ratio must be in (0, 1)")
    extracted: list[str] = []
    seen: set[str] = set()
    for keyword in spec.all_keywords():
        kw_words = keyword.split()
        hits = 0
        for sentence in sentences:
            if hits >= spec.cap:
                break
            if _find_keyword(sentence.lower().split(), kw_words, spec.match_mode) < 0:
                continue
            hits += 1
            if sentence not in seen:
                seen.add(sentence)
                extracted.append(sentence)
    if not extracted:
        raise EmptyResultError("no sentence matched any keyword")

    keywords = spec.all_keywords()
    skeletons: list[AnnotatedSentence] = []
    for sentence in extracted:
        rewritten = join_multiword_keywords(sentence, keywords, spec.match_mode)
        tokens = textprep.tokenize(rewritten)
        skeletons.append(AnnotatedSentence(tokens=tokens, tags=[O_TAG] * len(tokens)))

    random.Random(seed).shuffle(skeletons)
    n_train = int(split_ratio * len(skeletons) + 0.5)
    return skeletons[:n_train], skeletons[n_train:]


def parse_tag(tag: str) -> tuple[str, str]:
    """Split a tag into (prefix, category); O maps to ("O", "")."""
    if tag == O_TAG:
        return O_TAG, ""
    prefix, sep, category = tag.partition("-")
    if not sep or prefix not in PREFIXES or not category:
        raise ValueError(f"malformed tag {tag!r}")
    return prefix, category


def validate_bilou(tags: Sequence[str]) -> None:
    """Raise InvalidBilou at the first position violating the scheme."""
    open_cat: str | None = None
    for i, tag in enumerate(tags):
        try:
            prefix, category = parse_tag(tag)
        except ValueError as exc:
            raise InvalidBilouError(i, str(exc)) from exc
        if open_cat is None:
            if prefix in ("I", "L"):
                raise InvalidBilouError(i, f"{tag} without an open entity")
            if prefix == "B":
                open_cat = category
        else:
            if prefix not in ("I", "L") or category != open_cat:
                raise InvalidBilouError(
                    i, f"{tag} inside an open {open_cat} entity"
                )
            if prefix == "L":
                open_cat = None
    if open_cat is not None:
        raise InvalidBilouError(len(tags) - 1, "entity left open at sentence end")


def spans_to_bilou(tokens: Sequence[str], spans: Iterable[Span]) -> list[str]:
    """Encode non-overlapping spans over the tokens as BILOU tags."""
    n = len(tokens)
    ordered = sorted(spans, key=lambda s: s.start)
    tags = [O_TAG] * n
    prev_end = 0
    for span in ordered:
        if span.end > n:
            raise SpanOutOfBoundsError(
                f"span [{span.start}, {span.end}) exceeds sentence length {n}"
            )
        if span.start < prev_end:
            raise OverlappingSpansError(
                f"span [{span.start}, {span.end}) overlaps a previous span"
            )
        prev_end = span.end
        if span.end - span.start == 1:
            tags[span.start] = f"U-{span.category}"
        else:
            tags[span.start] = f"B-{span.category}"
            for i in range(span.start + 1, span.end - 1):
                tags[i] = f"I-{span.category}"
            tags[span.end - 1] = f"L-{span.category}"
    return tags


def bilou_to_spans(tags: Sequence[str], repair: bool = False) -> list[Span]:
    """Decode BILOU tags to spans; strict mode raises on invalid sequences,
    repair mode closes dangling entities at their last tagged position and
    turns orphan I/L tags into single-token spans."""
    if not repair:
        validate_bilou(tags)
        spans: list[Span] = []
        start = -1
        for i, tag in enumerate(tags):
            prefix, category = parse_tag(tag)
            if prefix == "U":
                spans.append(Span(i, i + 1, category))
            elif prefix == "B":
                start = i
            elif prefix == "L":
                spans.append(Span(start, i + 1, category))
        return spans

    spans = []
    open_start = -1
    open_cat: str | None = None
    for i, tag in enumerate(tags):
        try:
            prefix, category = parse_tag(tag)
        except ValueError:
            prefix, category = O_TAG, ""
        if open_cat is not None and (
            prefix == O_TAG
            or prefix in ("B", "U")
            or category != open_cat
        ):
            # dangling run: close at the last same-category position
            spans.append(Span(open_start, i, open_cat))
            open_cat = None
        if prefix == O_TAG:
            continue
        if prefix == "U":
            spans.append(Span(i, i + 1, category))
        elif prefix == "B":
            open_start, open_cat = i, category
        elif open_cat is not None and prefix == "L":
            spans.append(Span(open_start, i + 1, open_cat))
            open_cat = None
        elif open_cat is None:
            # orphan I/L becomes a unit span
            spans.append(Span(i, i + 1, category))
    if open_cat is not None:
        spans.append(Span(open_start, len(tags), open_cat))
    return spans


def write_annotations(
    sentences: Iterable[AnnotatedSentence], path: str | Path
) -> None:
    """Write token<TAB>tag lines with a blank line after each sentence."""
    with open(path, "w", encoding="utf-8") as handle:
        for sentence in sentences:
            for token, tag in zip(sentence.tokens, sentence.tags):
                handle.write(f"{token}\t{tag}\n")
            handle.write("\n")


def _check_tag(tag: str, line_no: int) -> None:
    if tag == O_TAG:
        return
    prefix, sep, category = tag.partition("-")
    if not sep or prefix not in PREFIXES or not category:
        raise FormatError(line_no, f"malformed tag {tag!r}")


def read_annotations(path: str | Path) -> list[AnnotatedSentence]:
    """Parse an annotation file; tag columns beyond the second are ignored.
    Each sentence's tag sequence must pass strict BILOU validation."""
    sentences: list[AnnotatedSentence] = []
    tokens: list[str] = []
    tags: list[str] = []
    start_line = 1

    def flush(line_no: int) -> None:
        nonlocal tokens, tags, start_line
        if tokens:
            try:
                validate_bilou(tags)
            except InvalidBilouError as exc:
                raise InvalidBilouError(start_line + exc.position, str(exc)) from exc
            sentences.append(AnnotatedSentence(tokens=tokens, tags=tags))
        tokens, tags = [], []
        start_line = line_no + 1

    with open(path, encoding="utf-8") as handle:
        line_no = 0
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush(line_no)
                continue
            parts = line.split("\t")
            if len(parts) < 2 or not parts[0]:
                raise FormatError(line_no, "expected token<TAB>tag")
            _check_tag(parts[1], line_no)
            tokens.append(parts[0])
            tags.append(parts[1])
    flush(line_no)
    return sentences


def count_labels(sentences: Iterable[AnnotatedSentence]) -> dict[str, int]:
    """Token counts per category (B/I/L/U collapsed) plus O."""
    counts: dict[str, int] = {}
    o_count = 0
    for sentence in sentences:
        for tag in sentence.tags:
            prefix, category = parse_tag(tag)
            if prefix == O_TAG:
                o_count += 1
            else:
                counts[category] = counts.get(category, 0) + 1
    out = {category: counts[category] for category in sorted(counts)}
    out[O_TAG] = o_count
    return out


def label_counts_table(counts: dict[str, int]) -> str:
    lines = ["label\tcount"]
    for label, count in counts.items():
        lines.append(f"{label}\t{count}")
    return "\n".join(lines) + "\n"
