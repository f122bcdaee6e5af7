"""Cross-evaluation, vocabulary overlap and vocabulary-size sweeps."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Document
from .errors import BpetokError
from .metrics import EvalReport, evaluate_corpus
from .model import TokenizerModel, TrainerConfig
from .trainer import prepare_corpus, train_bpe_sizes

log = logging.getLogger(__name__)


def vocab_overlap(a: TokenizerModel, b: TokenizerModel) -> float:
    """Share of ``a``'s learned pieces (regular + single-char) also learned by ``b``.

    Structural blocks are left out: they are the same in every model built
    from the same config and would only inflate the number.
    """
    learned_a = a.learned_surfaces()
    if not learned_a:
        return 0.0
    return len(learned_a & b.learned_surfaces()) / len(learned_a)


def overlap_table(models: Mapping[str, TokenizerModel]) -> dict[tuple[str, str], float]:
    return {(la, lb): vocab_overlap(ma, mb) for la, ma in models.items() for lb, mb in models.items()}


@dataclass
class CrossEvalMatrix:
    model_labels: list[str]
    corpus_labels: list[str]
    cells: list[list[EvalReport]]

    def cell(self, model_label: str, corpus_label: str) -> EvalReport:
        return self.cells[self.model_labels.index(model_label)][self.corpus_labels.index(corpus_label)]

    def best_model_per_corpus(self) -> dict[str, str]:
        """Model with the lowest fertility on each corpus (first label wins ties)."""
        out = {}
        for j, corpus in enumerate(self.corpus_labels):
            scores = [(self.cells[i][j].fertility_exact, i) for i in range(len(self.model_labels))]
            scores = [(f, i) for f, i in scores if f is not None]
            if scores:
                out[corpus] = self.model_labels[min(scores)[1]]
        return out

    def to_dict(self) -> dict:
        return {
            "models": self.model_labels,
            "corpora": self.corpus_labels,
            "cells": [[c.to_dict() for c in row] for row in self.cells],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "corpus", "fertility", "continued_proportion", "word_count", "token_count",
                    "split_word_count"])
        for ml, row in zip(self.model_labels, self.cells):
            for cl, r in zip(self.corpus_labels, row):
                w.writerow([ml, cl, r.fertility, r.continued_proportion, r.word_count, r.token_count,
                            r.split_word_count])
        return buf.getvalue()


def _eval_cell(args):
    model, docs, label = args
    return evaluate_corpus(model, docs, label)


def cross_evaluate(
    models: Mapping[str, TokenizerModel],
    corpora: Mapping[str, Sequence[Document | str]],
    *,
    threads: int = 1,
) -> CrossEvalMatrix:
    """Evaluate every model on every corpus.  Rows are models, columns corpora."""
    model_labels = list(models)
    corpus_labels = list(corpora)
    jobs = [(models[m], list(corpora[c]), c) for m in model_labels for c in corpus_labels]
    if threads <= 1:
        flat = [_eval_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            flat = list(pool.map(_eval_cell, jobs))
    n = len(corpus_labels)
    cells = [flat[i * n:(i + 1) * n] for i in range(len(model_labels))]
    return CrossEvalMatrix(model_labels, corpus_labels, cells)


@dataclass
class SweepRow:
    vocabulary_size: int
    reports: dict[str, EvalReport]
    overlaps: dict[str, float] = field(default_factory=dict)


@dataclass
class SweepReport:
    rows: list[SweepRow]
    complete: bool = True
    error: str | None = None
    models: list[TokenizerModel] = field(default_factory=list, repr=False)

    @property
    def sizes(self) -> list[int]:
        return [r.vocabulary_size for r in self.rows]

    def series(self, label: str, metric: str = "fertility") -> list[float | None]:
        return [getattr(r.reports[label], metric) for r in self.rows]

    def overlap_series(self, label: str) -> list[float]:
        return [r.overlaps[label] for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "complete": self.complete,
            "error": self.error,
            "rows": [
                {
                    "vocabulary_size": r.vocabulary_size,
                    "reports": {k: v.to_dict() for k, v in r.reports.items()},
                    "overlaps": r.overlaps,
                }
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["vocabulary_size", "corpus", "fertility", "continued_proportion", "overlap"])
        for r in self.rows:
            for label, rep in r.reports.items():
                w.writerow([r.vocabulary_size, label, rep.fertility, rep.continued_proportion,
                            r.overlaps.get(label, "")])
        return buf.getvalue()


def sweep_vocab_sizes(
    corpus: Iterable[Document | str],
    eval_corpora: Mapping[str, Sequence[Document | str]],
    sizes: Sequence[int],
    config: TrainerConfig,
    reference_models: Mapping[str, TokenizerModel] | None = None,
    *,
    threads: int = 1,
) -> SweepReport:
    """Train one model per size on ``corpus`` and evaluate each on ``eval_corpora``.

    ``overlaps[label]`` is ``vocab_overlap(reference, swept model)``: the share
    of the reference (e.g. monolingual) vocabulary the swept model has learned.
    """
    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be strictly increasing, got {sizes}")
    reference_models = dict(reference_models or {})
    try:
        prepared = prepare_corpus(corpus, config, threads=threads)
        models = train_bpe_sizes(prepared, config, sizes)
    except BpetokError as e:
        log.error("sweep training failed: %s", e)
        return SweepReport([], complete=False, error=str(e))
    rows = []
    for size, model in zip(sizes, models):
        reports = {label: evaluate_corpus(model, docs, label, threads=threads) for label, docs in eval_corpora.items()}
        overlaps = {label: vocab_overlap(ref, model) for label, ref in reference_models.items()}
        rows.append(SweepRow(size, reports, overlaps))
        log.info("sweep size %d done", size)
    return SweepReport(rows, models=models)
