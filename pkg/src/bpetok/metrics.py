"""Fertility and proportion of continued words.

Pieces are grouped into words.  A word opens at every piece that starts with
the whitespace marker, at the first piece of a sequence, and at the first
piece after a whitespace-run piece.  Special and code pieces are skipped.
Standalone punctuation pieces stay inside their word but are not counted,
and a word made only of punctuation is dropped.  Then

    fertility            = counted pieces / words
    continued proportion = words with >= 2 counted pieces / words

Word boundaries depend only on the text, never on the merges, so adding
merges can only lower both numbers on a fixed text.
"""

from __future__ import annotations

import enum
import unicodedata
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .codec import get_tokenizer
from .corpus import Document
from .model import MARKER, Piece, PieceKind, TokenizerModel, is_byte_piece


class PieceClass(enum.Enum):
    WORD_START = "word_start"
    CONTINUATION = "continuation"
    PUNCTUATION_ONLY = "punctuation_only"
    STRUCTURAL = "structural"


_STRUCTURAL = (PieceKind.SPECIAL, PieceKind.CODE, PieceKind.WHITESPACE_RUN)


def _as_piece(p: Piece | str) -> Piece:
    if isinstance(p, Piece):
        return p
    if is_byte_piece(p):
        return Piece(p, PieceKind.BYTE)
    if len(p) >= 2 and p.strip(MARKER) == "":
        return Piece(p, PieceKind.WHITESPACE_RUN)
    return Piece(p, PieceKind.SINGLE_CHAR if len(p) == 1 else PieceKind.REGULAR)


def is_punctuation(text: str) -> bool:
    return bool(text) and all(unicodedata.category(c).startswith("P") for c in text)


def classify_piece(piece: Piece | str) -> PieceClass:
    """Role of a piece in word counting.

    Bare strings are treated as regular pieces (byte and whitespace-run
    surfaces are recognised by shape).
    """
    piece = _as_piece(piece)
    if piece.kind in _STRUCTURAL:
        return PieceClass.STRUCTURAL
    if piece.kind is PieceKind.BYTE:
        return PieceClass.CONTINUATION
    if is_punctuation(piece.surface.lstrip(MARKER)):
        return PieceClass.PUNCTUATION_ONLY
    if piece.surface.startswith(MARKER):
        return PieceClass.WORD_START
    return PieceClass.CONTINUATION


def _has_content(piece: Piece) -> bool:
    if piece.kind is PieceKind.BYTE:
        return True
    rest = piece.surface.lstrip(MARKER)
    return bool(rest) and not is_punctuation(rest)


@dataclass(frozen=True)
class WordCounts:
    word_count: int = 0
    token_count: int = 0
    split_word_count: int = 0

    def __add__(self, other: WordCounts) -> WordCounts:
        return WordCounts(
            self.word_count + other.word_count,
            self.token_count + other.token_count,
            self.split_word_count + other.split_word_count,
        )


def count_words(pieces: Sequence[Piece | str]) -> WordCounts:
    """Word, counted-piece and split-word totals of one piece sequence."""
    words = tokens = split = 0
    cur_tokens = 0
    cur_has = False
    is_open = False
    after_run = True
    for raw in pieces:
        piece = _as_piece(raw)
        if piece.kind is PieceKind.WHITESPACE_RUN:
            after_run = True
            continue
        cls = classify_piece(piece)
        if cls is PieceClass.STRUCTURAL:
            continue
        if piece.surface.startswith(MARKER) or after_run or not is_open:
            if is_open and cur_has:
                words += 1
                tokens += cur_tokens
                split += cur_tokens >= 2
            is_open = True
            cur_tokens = 0
            cur_has = False
        after_run = False
        if cls is not PieceClass.PUNCTUATION_ONLY:
            cur_tokens += 1
        cur_has = cur_has or _has_content(piece)
    if is_open and cur_has:
        words += 1
        tokens += cur_tokens
        split += cur_tokens >= 2
    return WordCounts(words, tokens, int(split))


def fertility(pieces: Sequence[Piece | str]) -> Fraction | None:
    c = count_words(pieces)
    return Fraction(c.token_count, c.word_count) if c.word_count else None


def continued_proportion(pieces: Sequence[Piece | str]) -> Fraction | None:
    c = count_words(pieces)
    return Fraction(c.split_word_count, c.word_count) if c.word_count else None


@dataclass(frozen=True)
class EvalReport:
    label: str
    word_count: int
    token_count: int
    split_word_count: int

    @classmethod
    def from_counts(cls, label: str, counts: WordCounts) -> EvalReport:
        return cls(label, counts.word_count, counts.token_count, counts.split_word_count)

    @property
    def fertility_exact(self) -> Fraction | None:
        return Fraction(self.token_count, self.word_count) if self.word_count else None

    @property
    def continued_exact(self) -> Fraction | None:
        return Fraction(self.split_word_count, self.word_count) if self.word_count else None

    @property
    def fertility(self) -> float | None:
        f = self.fertility_exact
        return None if f is None else float(f)

    @property
    def continued_proportion(self) -> float | None:
        p = self.continued_exact
        return None if p is None else float(p)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fertility"] = self.fertility
        d["continued_proportion"] = self.continued_proportion
        return d


class PieceTable:
    """Per-id attributes of a model's vocabulary, for the counting kernel."""

    def __init__(self, model: TokenizerModel):
        n = len(model.pieces)
        self.cls = np.empty(n, dtype=np.int8)
        self.opens = np.zeros(n, dtype=np.bool_)
        self.content = np.zeros(n, dtype=np.bool_)
        for i, piece in enumerate(model.pieces):
            if piece.kind is PieceKind.WHITESPACE_RUN:
                self.cls[i] = _kernels.CLS_RUN
            elif piece.kind in _STRUCTURAL:
                self.cls[i] = _kernels.CLS_DROP
            elif classify_piece(piece) is PieceClass.PUNCTUATION_ONLY:
                self.cls[i] = _kernels.CLS_PUNCT
            else:
                self.cls[i] = _kernels.CLS_COUNTED
            self.opens[i] = piece.kind not in _STRUCTURAL and piece.surface.startswith(MARKER)
            self.content[i] = piece.kind not in _STRUCTURAL and _has_content(piece)

    def count(self, ids: Sequence[int]) -> WordCounts:
        arr = np.asarray(ids, dtype=np.int64)
        return WordCounts(*(int(x) for x in _kernels.word_counts(arr, self.cls, self.opens, self.content)))


def _piece_table(model: TokenizerModel) -> PieceTable:
    table = model.__dict__.get("_piece_table")
    if table is None:
        table = PieceTable(model)
        object.__setattr__(model, "_piece_table", table)
    return table


def document_counts(model: TokenizerModel, text: str) -> WordCounts:
    return _piece_table(model).count(get_tokenizer(model).encode_ids(text))


def _texts(corpus: Iterable[Document | str]) -> Iterable[str]:
    for doc in corpus:
        yield doc if isinstance(doc, str) else doc.text


def _count_chunk(args: tuple[TokenizerModel, list[str]]) -> WordCounts:
    model, texts = args
    total = WordCounts()
    for text in texts:
        total = total + document_counts(model, text)
    return total


def evaluate_corpus(
    model: TokenizerModel,
    corpus: Iterable[Document | str],
    label: str = "",
    *,
    threads: int = 1,
) -> EvalReport:
    """Encode every document and report corpus-level (summed) counts."""
    if threads <= 1:
        return EvalReport.from_counts(label, _count_chunk((model, list(_texts(corpus)))))
    texts = list(_texts(corpus))
    step = max(1, -(-len(texts) // threads))
    chunks = [(model, texts[i:i + step]) for i in range(0, len(texts), step)]
    total = WordCounts()
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(_count_chunk, chunks):
            total = total + part
    return EvalReport.from_counts(label, total)
