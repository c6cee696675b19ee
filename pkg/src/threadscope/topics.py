"""Vocabulary building with document-frequency thresholds and online
variational Bayes LDA, plus per-document topic assignment, top-word export,
high-probability document sampling, and per-month k=2 side topics.

The E-step/M-step split follows the standard online VB recipe: per
minibatch t the topic-word parameters blend as
lambda <- (1-rho_t) lambda + rho_t lambda_hat with rho_t = (tau0+t)^-kappa.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyCorpusError, EmptyVocabularyError, NoAssignedDocumentsError

_lgamma = np.vectorize(math.lgamma, otypes=[float])

# digamma switches from upward recurrence to the asymptotic series here
_PSI_LARGE = 10.0


def digamma(x):
    """Digamma for positive arguments, scalar or array, via upward
    recurrence below 10 and the Bernoulli asymptotic series above."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).copy()
    if np.any(arr <= 0):
        raise ValueError("digamma requires positive arguments")
    acc = np.zeros_like(arr)
    small = arr < _PSI_LARGE
    while np.any(small):
        acc[small] -= 1.0 / arr[small]
        arr[small] += 1.0
        small = arr < _PSI_LARGE
    inv = 1.0 / arr
    y = inv * inv
    tail = y * (
        1.0 / 12.0
        - y
        * (
            1.0 / 120.0
            - y
            * (
                1.0 / 252.0
                - y
                * (
                    1.0 / 240.0
                    - y * (1.0 / 132.0 - y * (691.0 / 32760.0 - y / 12.0))
                )
            )
        )
    )
    result = acc + np.log(arr) - 0.5 * inv - tail
    return float(result[0]) if scalar else result


@dataclass(frozen=True)
class Vocabulary:
    """Retained terms with dense first-occurrence indices."""

    terms: dict[str, int]
    df: dict[str, int]
    n_docs: int

    @property
    def size(self) -> int:
        return len(self.terms)

    def ordered_terms(self) -> list[str]:
        out = [""] * len(self.terms)
        for term, index in self.terms.items():
            out[index] = term
        return out


@dataclass(frozen=True)
class DocTermMatrix:
    """Per-document sparse (term index, count) rows over a V-term space."""

    rows: tuple[tuple[tuple[int, int], ...], ...]
    n_terms: int

    @property
    def n_docs(self) -> int:
        return len(self.rows)

    def total_count(self) -> int:
        return sum(count for row in self.rows for _, count in row)


def build_vocabulary(
    cleaned_documents: Sequence[str], max_df: float = 0.90, min_df: int = 3
) -> tuple[Vocabulary, DocTermMatrix]:
    """Whitespace-tokenize cleaned documents and retain terms with
    df >= min_df and df/n_docs <= max_df; both exclusions are strict."""
    n_docs = len(cleaned_documents)
    doc_tokens = [doc.split() for doc in cleaned_documents]
    df: dict[str, int] = {}
    for tokens in doc_tokens:
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1

    def retained(term: str) -> bool:
        return df[term] >= min_df and df[term] / n_docs <= max_df

    terms: dict[str, int] = {}
    for tokens in doc_tokens:
        for term in tokens:
            if term not in terms and retained(term):
                terms[term] = len(terms)
    if not terms:
        raise EmptyVocabularyError(
            f"no term satisfies min_df={min_df}, max_df={max_df} "
            f"over {n_docs} documents"
        )

    rows: list[tuple[tuple[int, int], ...]] = []
    for tokens in doc_tokens:
        counts: dict[int, int] = {}
        for term in tokens:
            index = terms.get(term)
            if index is not None:
                counts[index] = counts.get(index, 0) + 1
        rows.append(tuple(sorted(counts.items())))
    vocab = Vocabulary(terms=terms, df={t: df[t] for t in terms}, n_docs=n_docs)
    return vocab, DocTermMatrix(rows=tuple(rows), n_terms=len(terms))


def doc_to_counts(vocab: Vocabulary, cleaned_text: str) -> tuple[tuple[int, int], ...]:
    counts: dict[int, int] = {}
    for term in cleaned_text.split():
        index = vocab.terms.get(term)
        if index is not None:
            counts[index] = counts.get(index, 0) + 1
    return tuple(sorted(counts.items()))


@dataclass(frozen=True)
class LdaConfig:
    """Online VB knobs; alpha/eta default to the symmetric 1/k prior."""

    k: int
    alpha: float | None = None
    eta: float | None = None
    tau0: float = 15.0
    kappa: float = 0.7
    batch_size: int = 128
    epochs: int = 10
    mean_change_tol: float = 1e-3
    max_e_iters: int = 100
    seed: int = 42
    top_n: int = 15

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if not 0.5 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0.5, 1]")
        if self.batch_size < 1 or self.epochs < 1 or self.max_e_iters < 1:
            raise ValueError("batch_size, epochs, and max_e_iters must be positive")
        if self.mean_change_tol <= 0:
            raise ValueError("mean_change_tol must be positive")
        if self.top_n < 1:
            raise ValueError("top_n must be positive")

    @property
    def alpha_value(self) -> float:
        return self.alpha if self.alpha is not None else 1.0 / self.k

    @property
    def eta_value(self) -> float:
        return self.eta if self.eta is not None else 1.0 / self.k


@dataclass
class TopicModel:
    lam: np.ndarray
    config: LdaConfig
    vocab: Vocabulary | None = None
    epoch_perplexities: list[float] = field(default_factory=list)


@dataclass
class DocTopics:
    gamma: np.ndarray
    assigned: int
    probability: float


def learning_rate(tau0: float, kappa: float, t: int) -> float:
    return (tau0 + t) ** (-kappa)


def _exp_elog_beta(lam: np.ndarray) -> np.ndarray:
    return np.exp(digamma(lam) - digamma(lam.sum(axis=1))[:, np.newaxis])


def _estep_doc(
    cts: np.ndarray,
    exp_elog_beta_doc: np.ndarray,
    alpha: float,
    k: int,
    tol: float,
    max_iters: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Iterate gamma for one document until the mean absolute change drops
    below tol; returns (gamma, exp_elog_theta, cts/phinorm)."""
    # deterministic start: prior plus an even share of the doc's mass
    gamma = np.full(k, alpha + cts.sum() / k)
    exp_elog_theta = np.exp(digamma(gamma) - digamma(gamma.sum()))
    phinorm = exp_elog_theta @ exp_elog_beta_doc + 1e-100
    for _ in range(max_iters):
        last = gamma
        gamma = alpha + exp_elog_theta * ((cts / phinorm) @ exp_elog_beta_doc.T)
        exp_elog_theta = np.exp(digamma(gamma) - digamma(gamma.sum()))
        phinorm = exp_elog_theta @ exp_elog_beta_doc + 1e-100
        if np.abs(gamma - last).mean() < tol:
            break
    return gamma, exp_elog_theta, cts / phinorm


def _row_arrays(row: Sequence[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    if row:
        ids = np.array([i for i, _ in row], dtype=int)
        cts = np.array([c for _, c in row], dtype=float)
    else:
        ids = np.zeros(0, dtype=int)
        cts = np.zeros(0, dtype=float)
    return ids, cts


def fit_lda(matrix: DocTermMatrix, config: LdaConfig) -> TopicModel:
    """Online variational Bayes with a seeded gamma-distributed lambda
    initialization and per-epoch document shuffling; records per-epoch
    training perplexity from the variational bound."""
    if matrix.n_docs == 0:
        raise EmptyCorpusError("cannot fit topics on an empty corpus")
    if matrix.n_terms == 0:
        raise EmptyVocabularyError("matrix has no terms")
    k = config.k
    n_docs = matrix.n_docs
    alpha = config.alpha_value
    eta = config.eta_value
    batch_size = min(config.batch_size, n_docs)

    rng = np.random.default_rng(config.seed)
    lam = rng.gamma(100.0, 1.0 / 100.0, (k, matrix.n_terms))
    doc_arrays = [_row_arrays(row) for row in matrix.rows]

    model = TopicModel(lam=lam, config=config)
    t = 0
    for _ in range(config.epochs):
        order = rng.permutation(n_docs)
        for start in range(0, n_docs, batch_size):
            batch = order[start : start + batch_size]
            exp_elog_beta = _exp_elog_beta(lam)
            sstats = np.zeros_like(lam)
            for index in batch:
                ids, cts = doc_arrays[index]
                if ids.size == 0:
                    continue
                _, exp_elog_theta, ratio = _estep_doc(
                    cts,
                    exp_elog_beta[:, ids],
                    alpha,
                    k,
                    config.mean_change_tol,
                    config.max_e_iters,
                )
                sstats[:, ids] += np.outer(exp_elog_theta, ratio)
            sstats *= exp_elog_beta
            lam_hat = eta + (n_docs / len(batch)) * sstats
            rho = learning_rate(config.tau0, config.kappa, t)
            lam = (1 - rho) * lam + rho * lam_hat
            t += 1
        model.lam = lam
        model.epoch_perplexities.append(perplexity(lam, matrix, config))
    return model


def infer_doc_topics(model: TopicModel, row: Sequence[tuple[int, int]]) -> DocTopics:
    """E-step with lambda frozen; an empty document sits at the prior's
    fixed point, so its probability is exactly 1/k."""
    k = model.config.k
    alpha = model.config.alpha_value
    if not row:
        return DocTopics(gamma=np.full(k, alpha), assigned=0, probability=1.0 / k)
    ids, cts = _row_arrays(row)
    exp_elog_beta = _exp_elog_beta(model.lam)
    gamma, _, _ = _estep_doc(
        cts,
        exp_elog_beta[:, ids],
        alpha,
        k,
        model.config.mean_change_tol,
        model.config.max_e_iters,
    )
    assigned = int(np.argmax(gamma))
    return DocTopics(
        gamma=gamma,
        assigned=assigned,
        probability=float(gamma[assigned] / gamma.sum()),
    )


def _dirichlet_ll(values: np.ndarray, prior: float) -> float:
    """E[log p(x|prior)] - E[log q(x|values)] for one Dirichlet row."""
    total = values.sum()
    score = float(
        ((prior - values) * (digamma(values) - digamma(total))).sum()
        + _lgamma(values).sum()
        - math.lgamma(total)
    )
    n = values.size
    return score + math.lgamma(n * prior) - n * math.lgamma(prior)


def variational_bound(
    lam: np.ndarray, matrix: DocTermMatrix, config: LdaConfig
) -> float:
    """Evidence lower bound on the corpus under lambda, with per-document
    gammas re-inferred at the frozen lambda."""
    alpha = config.alpha_value
    eta = config.eta_value
    elog_beta = digamma(lam) - digamma(lam.sum(axis=1))[:, np.newaxis]
    exp_elog_beta = np.exp(elog_beta)
    score = 0.0
    for row in matrix.rows:
        if not row:
            continue
        ids, cts = _row_arrays(row)
        gamma, _, _ = _estep_doc(
            cts,
            exp_elog_beta[:, ids],
            alpha,
            config.k,
            config.mean_change_tol,
            config.max_e_iters,
        )
        elog_theta = digamma(gamma) - digamma(gamma.sum())
        joint = elog_theta[:, np.newaxis] + elog_beta[:, ids]
        peak = joint.max(axis=0)
        word_ll = np.log(np.exp(joint - peak).sum(axis=0)) + peak
        score += float((cts * word_ll).sum())
        score += _dirichlet_ll(gamma, alpha)
    for topic in range(config.k):
        score += _dirichlet_ll(lam[topic], eta)
    return score


def perplexity(lam: np.ndarray, matrix: DocTermMatrix, config: LdaConfig) -> float:
    """exp(-bound / token count); lower is better."""
    total = matrix.total_count()
    if total == 0:
        return float("nan")
    return math.exp(-variational_bound(lam, matrix, config) / total)


def topic_word_distribution(lam: np.ndarray) -> np.ndarray:
    return lam / lam.sum(axis=1, keepdims=True)


def top_words(
    model: TopicModel, top_n: int | None = None
) -> list[list[tuple[str, float]]]:
    """Per topic: the top_n heaviest terms, descending weight with
    lower-index tiebreak."""
    if model.vocab is None:
        raise ValueError("model has no vocabulary attached")
    n = model.config.top_n if top_n is None else top_n
    terms = model.vocab.ordered_terms()
    dist = topic_word_distribution(model.lam)
    out: list[list[tuple[str, float]]] = []
    for topic in range(model.config.k):
        row = dist[topic]
        order = np.lexsort((np.arange(row.size), -row))[:n]
        out.append([(terms[i], float(row[i])) for i in order])
    return out


@dataclass(frozen=True)
class TopicAssignment:
    post_id: str
    topic: int
    probability: float


def assign_topics(
    model: TopicModel, documents: Sequence
) -> tuple[list[TopicAssignment], list[int]]:
    """Assign each document its argmax topic and probability; also return
    the per-topic assignment frequencies (zero-filled over all k topics)."""
    if model.vocab is None:
        raise ValueError("model has no vocabulary attached")
    assignments: list[TopicAssignment] = []
    frequencies = [0] * model.config.k
    for doc in documents:
        row = doc_to_counts(model.vocab, doc.cleaned_text)
        inferred = infer_doc_topics(model, row)
        assignments.append(
            TopicAssignment(
                post_id=doc.post_id,
                topic=inferred.assigned,
                probability=inferred.probability,
            )
        )
        frequencies[inferred.assigned] += 1
    return assignments, frequencies


@dataclass(frozen=True)
class RsdSample:
    """Documents sampled for reading: qualifying ones uniformly at random,
    topped up from the highest-probability rest when too few qualify."""

    post_ids: tuple[str, ...]
    fallback: bool


def select_rsd(
    assignments: Sequence[TopicAssignment],
    topic: int,
    threshold: float = 0.9,
    n: int = 5,
    seed: int = 0,
) -> RsdSample:
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    assigned = [a for a in assignments if a.topic == topic]
    if not assigned:
        raise NoAssignedDocumentsError(f"no documents assigned to topic {topic}")
    qualifying = [a for a in assigned if a.probability >= threshold]
    if len(qualifying) >= n:
        sample = random.Random(seed).sample(qualifying, n)
        return RsdSample(post_ids=tuple(a.post_id for a in sample), fallback=False)
    rest = sorted(
        (a for a in assigned if a.probability < threshold),
        key=lambda a: (-a.probability, a.post_id),
    )
    chosen = qualifying + rest[: n - len(qualifying)]
    return RsdSample(post_ids=tuple(a.post_id for a in chosen), fallback=True)


def _month_of(created_utc: int) -> str:
    return datetime.fromtimestamp(created_utc, tz=timezone.utc).strftime("%Y-%m")


@dataclass(frozen=True)
class MonthlyTopics:
    month: str
    skipped: bool
    reason: str
    topics: tuple[tuple[tuple[str, float], ...], ...]


def monthly_side_topics(
    documents: Sequence,
    config: LdaConfig,
    max_df: float = 0.90,
    min_df: int = 3,
    min_docs: int = 5,
) -> list[MonthlyTopics]:
    """Partition documents by UTC calendar month and fit a fresh k=2 model
    per month with at least min_docs documents, emitting both topics' top
    word lists; thin or vocabulary-free months are reported as skipped."""
    by_month: dict[str, list] = {}
    for doc in documents:
        by_month.setdefault(_month_of(doc.created_utc), []).append(doc)
    results: list[MonthlyTopics] = []
    for month in sorted(by_month):
        docs = by_month[month]
        if len(docs) < min_docs:
            results.append(
                MonthlyTopics(
                    month=month,
                    skipped=True,
                    reason=f"{len(docs)} documents < min_docs {min_docs}",
                    topics=(),
                )
            )
            continue
        try:
            vocab, matrix = build_vocabulary(
                [doc.cleaned_text for doc in docs], max_df=max_df, min_df=min_df
            )
        except EmptyVocabularyError as exc:
            results.append(
                MonthlyTopics(month=month, skipped=True, reason=str(exc), topics=())
            )
            continue
        month_config = LdaConfig(
            k=2,
            tau0=config.tau0,
            kappa=config.kappa,
            batch_size=config.batch_size,
            epochs=config.epochs,
            mean_change_tol=config.mean_change_tol,
            max_e_iters=config.max_e_iters,
            seed=config.seed,
            top_n=config.top_n,
        )
        model = fit_lda(matrix, month_config)
        model.vocab = vocab
        lists = top_words(model)
        results.append(
            MonthlyTopics(
                month=month,
                skipped=False,
                reason="",
                topics=tuple(tuple(pairs) for pairs in lists),
            )
        )
    return results


def save_topic_model(model: TopicModel, path: str | Path) -> None:
    if model.vocab is None:
        raise ValueError("model has no vocabulary attached")
    config = model.config
    payload = {
        "version": 1,
        "config": {
            "k": config.k,
            "alpha": config.alpha,
            "eta": config.eta,
            "tau0": config.tau0,
            "kappa": config.kappa,
            "batch_size": config.batch_size,
            "epochs": config.epochs,
            "mean_change_tol": config.mean_change_tol,
            "max_e_iters": config.max_e_iters,
            "seed": config.seed,
            "top_n": config.top_n,
        },
        "vocab": model.vocab.ordered_terms(),
        "df": [model.vocab.df[t] for t in model.vocab.ordered_terms()],
        "n_docs": model.vocab.n_docs,
        "lambda": [[float(v) for v in row] for row in model.lam],
        "epoch_perplexities": [float(p) for p in model.epoch_perplexities],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")


def load_topic_model(path: str | Path) -> TopicModel:
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    config = LdaConfig(**payload["config"])
    terms = {term: i for i, term in enumerate(payload["vocab"])}
    vocab = Vocabulary(
        terms=terms,
        df=dict(zip(payload["vocab"], payload["df"])),
        n_docs=payload["n_docs"],
    )
    model = TopicModel(
        lam=np.array(payload["lambda"], dtype=float),
        config=config,
        vocab=vocab,
    )
    model.epoch_perplexities = [float(p) for p in payload["epoch_perplexities"]]
    return model
