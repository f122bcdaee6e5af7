"""BPE training.

Pipeline: count units -> pick the coverage alphabet -> learn merges with
incremental pair counts -> lay out the vocabulary -> whitespace surgery.

Merge selection: the eligible adjacent pair with the highest frequency-weighted
count; ties go to the lexicographically smallest ``(left, right)``.  A pair is
eligible when neither side is a byte piece, the unk piece or a digit, the
merged surface is at most ``max_piece_length`` characters, and the merged
surface is not already in the vocabulary.
"""

from __future__ import annotations

import heapq
import logging
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .corpus import Document
from .errors import TrainingError
from .model import (
    BYTE_PIECES,
    MARKER,
    Piece,
    PieceKind,
    TokenizerModel,
    TrainerConfig,
    assemble_pieces,
    whitespace_run_piece,
)
from .pretokenize import WORD, character_counts, count_units, symbolize

log = logging.getLogger(__name__)


def _texts(corpus: Iterable[Document | str]) -> Iterable[str]:
    for doc in corpus:
        yield doc if isinstance(doc, str) else doc.text


# ---------------------------------------------------------------------------
# character coverage


def coverage_alphabet(char_counts: Mapping[str, int], coverage: float) -> list[str]:
    """Most frequent characters whose cumulative share reaches ``coverage``.

    Ordered by descending count, then codepoint.  Characters tied with the last
    one admitted are admitted too, so the result does not depend on codepoints.
    """
    if not 0 < coverage <= 1:
        raise ValueError(f"coverage must be in (0, 1], got {coverage}")
    ranked = sorted(((c, n) for c, n in char_counts.items() if n > 0), key=lambda cn: (-cn[1], cn[0]))
    total = sum(n for _, n in ranked)
    if total == 0:
        return []
    target = Fraction(str(coverage)) * total
    out: list[str] = []
    cum = 0
    cutoff = None
    for ch, n in ranked:
        if cutoff is not None and n < cutoff:
            break
        out.append(ch)
        cum += n
        if cutoff is None and cum >= target:
            cutoff = n
    return out


def compute_coverage_alphabet(corpus: Iterable[Document | str], coverage: float) -> set[str]:
    """Coverage alphabet over the raw characters of ``corpus``."""
    counts: Counter = Counter()
    for text in _texts(corpus):
        counts.update(text)
    return set(coverage_alphabet(counts, coverage))


# ---------------------------------------------------------------------------
# merge learning


class MergeLearner:
    """Incremental BPE over a fixed multiset of words.

    Pair counts are kept in a dict and only the words containing the merged
    pair are rescanned.  Candidates sit in a lazy max-heap keyed by
    ``(-count, left, right)``; stale entries are skipped on pop.
    """

    def __init__(
        self,
        words: Mapping[tuple[str, ...], int],
        *,
        existing: Iterable[str],
        unmergeable: Iterable[str],
        max_piece_length: int,
        max_merges: int,
        debug: bool = False,
    ):
        self.debug = debug
        self.max_piece_length = max_piece_length
        self.existing = set(existing)
        unmergeable = set(unmergeable)

        items = sorted(words.items())
        self._initial = [symbols for symbols, _ in items]
        self.surfaces: list[str] = []
        self._ids: dict[str, int] = {}
        for symbols, _ in items:
            for s in symbols:
                if s not in self._ids:
                    self._ids[s] = len(self.surfaces)
                    self.surfaces.append(s)
        self.mergeable = [s not in unmergeable for s in self.surfaces]
        # key space: every symbol that can ever exist
        self.max_merges = max_merges
        self.n_keys = len(self.surfaces) + max_merges + 1

        lengths = np.array([len(s) for s, _ in items], dtype=np.int64)
        self.lengths = lengths.copy()
        self.starts = np.concatenate(([0], np.cumsum(lengths)[:-1])).astype(np.int64) if len(items) else lengths
        self.freqs = np.array([f for _, f in items], dtype=np.int64)
        self.symbols = np.fromiter(
            (self._ids[s] for symbols, _ in items for s in symbols), dtype=np.int32, count=int(lengths.sum())
        )

        self.counts: dict[int, int] = {}
        self.where: dict[int, set[int]] = {}
        self.heap: list[tuple[int, str, str, int]] = []
        self.banned: set[int] = set()
        self.merges: list[tuple[str, str]] = []
        self.selected_counts: list[int] = []

        all_words = np.arange(len(items), dtype=np.int64)
        lefts, rights, owners = _kernels.word_pairs(self.symbols, self.starts, self.lengths, all_words)
        keys, ls, rs, sums = _kernels.aggregate_pair_deltas(lefts, rights, self.freqs[owners], self.n_keys)
        for key, l, r, c in zip(keys.tolist(), ls.tolist(), rs.tolist(), sums.tolist()):
            self.counts[key] = c
            self._push(key, l, r, c)
        okeys = lefts.astype(np.int64) * self.n_keys + rights.astype(np.int64)
        for key, w in zip(okeys.tolist(), owners.tolist()):
            ws = self.where.get(key)
            if ws is None:
                self.where[key] = {w}
            else:
                ws.add(w)

    def _push(self, key: int, l: int, r: int, count: int) -> None:
        if key in self.banned or not (self.mergeable[l] and self.mergeable[r]):
            return
        ls, rs = self.surfaces[l], self.surfaces[r]
        if len(ls) + len(rs) > self.max_piece_length:
            return
        heapq.heappush(self.heap, (-count, ls, rs, key))

    def _pop_best(self) -> tuple[int, int] | None:
        heap = self.heap
        while heap:
            negc, ls, rs, key = heap[0]
            count = self.counts.get(key, 0)
            if count != -negc:
                heapq.heappop(heap)
                continue
            if ls + rs in self.existing:
                heapq.heappop(heap)
                self.banned.add(key)
                continue
            heapq.heappop(heap)
            return key, count
        return None

    def brute_force_count(self, l: int, r: int) -> int:
        total = 0
        for w in range(len(self.freqs)):
            s, n = int(self.starts[w]), int(self.lengths[w])
            seq = self.symbols[s:s + n]
            total += int(np.count_nonzero((seq[:-1] == l) & (seq[1:] == r))) * int(self.freqs[w])
        return total

    def step(self) -> bool:
        if len(self.merges) >= self.max_merges:
            return False
        best = self._pop_best()
        if best is None:
            return False
        key, count = best
        l, r = divmod(key, self.n_keys)
        if self.debug:
            recount = self.brute_force_count(l, r)
            assert recount == count, f"pair count drift: {count} != {recount}"
        assert count >= 1

        merged = self.surfaces[l] + self.surfaces[r]
        new = len(self.surfaces)
        self.surfaces.append(merged)
        self.mergeable.append(True)
        self._ids[merged] = new
        self.existing.add(merged)
        self.merges.append((self.surfaces[l], self.surfaces[r]))
        self.selected_counts.append(count)

        words = np.array(sorted(self.where.pop(key)), dtype=np.int64)
        ol, orr, oo = _kernels.word_pairs(self.symbols, self.starts, self.lengths, words)
        _kernels.apply_merge(self.symbols, self.starts, self.lengths, words, l, r, new)
        nl, nr, no = _kernels.word_pairs(self.symbols, self.starts, self.lengths, words)

        lefts = np.concatenate((ol, nl))
        rights = np.concatenate((orr, nr))
        weights = np.concatenate((-self.freqs[oo], self.freqs[no]))
        keys, ls, rs, deltas = _kernels.aggregate_pair_deltas(lefts, rights, weights, self.n_keys)
        counts = self.counts
        for k, kl, kr, d in zip(keys.tolist(), ls.tolist(), rs.tolist(), deltas.tolist()):
            c = counts.get(k, 0) + d
            if c > 0:
                counts[k] = c
                self._push(k, kl, kr, c)
            else:
                counts.pop(k, None)
        counts.pop(key, None)

        touched = (nl == new) | (nr == new)
        if touched.any():
            nkeys = nl[touched].astype(np.int64) * self.n_keys + nr[touched].astype(np.int64)
            for k, w in zip(nkeys.tolist(), no[touched].tolist()):
                ws = self.where.get(k)
                if ws is None:
                    self.where[k] = {w}
                else:
                    ws.add(w)
        return True

    def run(self, n_merges: int) -> list[tuple[str, str]]:
        while len(self.merges) < n_merges and self.step():
            pass
        return self.merges

    def final_words(self) -> dict[tuple[str, ...], tuple[str, ...]]:
        """Current segmentation of every word, keyed by its initial symbols."""
        out = {}
        for w, initial in enumerate(self._initial):
            s, n = int(self.starts[w]), int(self.lengths[w])
            out[initial] = tuple(self.surfaces[i] for i in self.symbols[s:s + n].tolist())
        return out


def learn_merges(
    words: Mapping[tuple[str, ...], int],
    n_merges: int,
    *,
    existing: Iterable[str],
    unmergeable: Iterable[str],
    max_piece_length: int,
    debug: bool = False,
) -> list[tuple[str, str]]:
    """Learn up to ``n_merges`` merge rules from weighted words."""
    learner = MergeLearner(
        words,
        existing=existing,
        unmergeable=unmergeable,
        max_piece_length=max_piece_length,
        max_merges=n_merges,
        debug=debug,
    )
    return learner.run(n_merges)


# ---------------------------------------------------------------------------
# training driver


class PreparedCorpus:
    """Everything training needs from a corpus, computed once per config."""

    def __init__(self, unit_counts: Counter, config: TrainerConfig):
        self.config = config
        chars = character_counts(unit_counts)
        alphabet = coverage_alphabet(chars, config.character_coverage)
        if MARKER not in alphabet:
            alphabet.append(MARKER)
        self.alphabet = alphabet
        alpha = frozenset(alphabet)
        unk = config.special_pieces[1]
        words: Counter = Counter()
        for (kind, raw), n in unit_counts.items():
            if kind == WORD:
                words[symbolize(raw, alpha, config.byte_fallback, unk)] += n
        self.words = dict(words)

    def minimum_vocabulary_size(self) -> int:
        return self.config.n_fixed + len(self.alphabet) + self.config.n_whitespace_runs

    def merge_budget(self, vocabulary_size: int) -> int:
        """Merges to learn before surgery; includes the slots the whitespace runs will take."""
        minimum = self.minimum_vocabulary_size()
        if vocabulary_size < minimum:
            raise TrainingError(
                f"vocabulary_size {vocabulary_size} is too small: special/code/byte/whitespace blocks "
                f"and the {len(self.alphabet)}-character alphabet need at least {minimum}"
            )
        return vocabulary_size - self.config.n_fixed - len(self.alphabet)

    def reserved_surfaces(self) -> set[str]:
        cfg = self.config
        out = set(cfg.special_pieces) | set(cfg.user_defined_symbols) | set(BYTE_PIECES)
        out |= {whitespace_run_piece(n) for n in range(2, cfg.max_ws_run + 1)}
        return out | set(self.alphabet)

    def unmergeable_symbols(self) -> set[str]:
        out = set(BYTE_PIECES) | {self.config.special_pieces[1]}
        if self.config.split_digits:
            out |= {c for c in self.alphabet if c.isdecimal()}
        return out

    def learner(self, n_merges: int, debug: bool = False) -> MergeLearner:
        return MergeLearner(
            self.words,
            existing=self.reserved_surfaces(),
            unmergeable=self.unmergeable_symbols(),
            max_piece_length=self.config.max_piece_length,
            max_merges=n_merges,
            debug=debug,
        )

    def build_model(self, merges: Sequence[tuple[str, str]], vocabulary_size: int) -> TokenizerModel:
        cfg = replace(self.config, vocabulary_size=vocabulary_size)
        raw = TokenizerModel(cfg, tuple(assemble_pieces(cfg, merges, self.alphabet)), tuple(merges))
        return whitespace_surgery(raw)


def _count_chunk(args: tuple[list[str], TrainerConfig]) -> Counter:
    texts, config = args
    return count_units(texts, config)


def prepare_corpus(corpus: Iterable[Document | str], config: TrainerConfig, threads: int = 1) -> PreparedCorpus:
    if threads <= 1:
        unit_counts = count_units(_texts(corpus), config)
    else:
        texts = list(_texts(corpus))
        step = max(1, -(-len(texts) // threads))
        chunks = [(texts[i:i + step], config) for i in range(0, len(texts), step)]
        unit_counts = Counter()
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(_count_chunk, chunks):
                unit_counts.update(part)
    if not unit_counts:
        raise TrainingError("cannot train on an empty corpus")
    return PreparedCorpus(unit_counts, config)


def train_bpe(
    corpus: Iterable[Document | str],
    config: TrainerConfig,
    *,
    threads: int = 1,
    debug: bool = False,
) -> TokenizerModel:
    """Train a tokenizer model on ``corpus`` (documents or plain strings)."""
    prepared = prepare_corpus(corpus, config, threads=threads)
    budget = prepared.merge_budget(config.vocabulary_size)
    log.info(
        "training: %d distinct words, alphabet %d, merge budget %d (%s kernels)",
        len(prepared.words), len(prepared.alphabet), budget, _kernels.backend(),
    )
    merges = prepared.learner(budget, debug=debug).run(budget)
    if len(merges) < budget:
        log.warning("ran out of mergeable pairs after %d of %d merges", len(merges), budget)
    return prepared.build_model(merges, config.vocabulary_size)


def train_bpe_sizes(
    corpus: Iterable[Document | str] | PreparedCorpus,
    config: TrainerConfig,
    sizes: Sequence[int],
    *,
    threads: int = 1,
) -> list[TokenizerModel]:
    """Train one model per vocabulary size from a single merge run.

    Merge selection never looks at the target size, so the merges for a smaller
    size are a prefix of those for a larger one; each model is cut from one run.
    """
    if isinstance(corpus, PreparedCorpus):
        prepared = corpus
    else:
        prepared = prepare_corpus(corpus, config, threads=threads)
    budgets = [prepared.merge_budget(s) for s in sizes]
    merges = prepared.learner(max(budgets)).run(max(budgets))
    return [prepared.build_model(merges[:b], s) for b, s in zip(budgets, sizes)]


def whitespace_surgery(model: TokenizerModel) -> TokenizerModel:
    """Replace the last-learned regular pieces with whitespace-run pieces.

    ``model`` must not have a whitespace-run block yet.  Runs of length
    2..max_ws_run are appended at the end.  Free slots (vocabulary smaller than
    ``config.vocabulary_size``) are used first, so a fully trained model loses
    exactly ``max_ws_run - 1`` regular pieces and keeps its size.  If training
    stopped early the config is shrunk to the real size, with a warning.
    """
    cfg = model.config
    if any(p.kind is PieceKind.WHITESPACE_RUN for p in model.pieces):
        raise TrainingError("model already has whitespace-run pieces")
    n_runs = cfg.n_whitespace_runs
    if n_runs == 0:
        return model
    free = cfg.vocabulary_size - len(model.pieces)
    drop = max(0, n_runs - free)
    if drop > len(model.merges):
        raise TrainingError(
            f"whitespace surgery needs {drop} regular pieces to replace, model has {len(model.merges)}"
        )
    merges = model.merges[:len(model.merges) - drop]
    dropped = {l + r for l, r in model.merges[len(merges):]}
    pieces = [p for p in model.pieces if not (p.kind is PieceKind.REGULAR and p.surface in dropped)]
    pieces += [Piece(whitespace_run_piece(n), PieceKind.WHITESPACE_RUN) for n in range(2, cfg.max_ws_run + 1)]
    if len(pieces) != cfg.vocabulary_size:
        warnings.warn(
            f"training produced {len(pieces)} pieces, fewer than the requested {cfg.vocabulary_size}",
            stacklevel=2,
        )
        cfg = replace(cfg, vocabulary_size=len(pieces))
    return TokenizerModel(cfg, tuple(pieces), tuple(merges))
