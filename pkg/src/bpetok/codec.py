"""Lossless text <-> token conversion for a trained model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DecodeError
from .model import BOS_ID, BYTE_VALUES, EOS_ID, MARKER, PieceKind, TokenizerModel
from .pretokenize import DIGIT, RUN, SYMBOL, Pretokenizer, symbolize


@dataclass(frozen=True)
class EncodedSequence:
    ids: list[int]
    pieces: list[str]

    def __len__(self) -> int:
        return len(self.ids)


class Tokenizer:
    """Encoder/decoder bound to one model.

    Holds a per-word cache, so keep one instance around per model rather than
    building it per call.  Safe to share: the cache only ever grows with
    deterministic values.
    """

    def __init__(self, model: TokenizerModel):
        self.model = model
        cfg = model.config
        self.config = cfg
        self._pre = Pretokenizer(cfg)
        self._alphabet = frozenset(p.surface for p in model.pieces if p.kind is PieceKind.SINGLE_CHAR)
        self._ranks = {pair: rank for rank, pair in enumerate(model.merges)}
        self._ids = {p.surface: i for i, p in enumerate(model.pieces)}
        self._kinds = [p.kind for p in model.pieces]
        self._surfaces = [p.surface for p in model.pieces]
        self._unk = cfg.special_pieces[1]
        self._cache: dict[str, tuple[str, ...]] = {}

    # -- encoding ----------------------------------------------------------

    def _bpe(self, symbols: tuple[str, ...]) -> tuple[str, ...]:
        ranks = self._ranks
        word = list(symbols)
        while len(word) > 1:
            best = None
            best_rank = None
            for pair in zip(word, word[1:]):
                r = ranks.get(pair)
                if r is not None and (best_rank is None or r < best_rank):
                    best, best_rank = pair, r
            if best is None:
                break
            left, right = best
            merged = left + right
            out = []
            i = 0
            n = len(word)
            while i < n:
                if i + 1 < n and word[i] == left and word[i + 1] == right:
                    out.append(merged)
                    i += 2
                else:
                    out.append(word[i])
                    i += 1
            word = out
        return tuple(word)

    def _word(self, raw: str) -> tuple[str, ...]:
        hit = self._cache.get(raw)
        if hit is None:
            symbols = symbolize(raw, self._alphabet, self.config.byte_fallback, self._unk)
            hit = self._bpe(symbols)
            self._cache[raw] = hit
        return hit

    def encode_pieces(self, text: str) -> list[str]:
        out: list[str] = []
        for kind, raw in self._pre.split_units(text):
            if kind == SYMBOL:
                out.append(raw)
            elif kind == RUN:
                out.append(MARKER * len(raw))
            elif kind == DIGIT:
                out.extend(symbolize(raw, self._alphabet, self.config.byte_fallback, self._unk))
            else:
                out.extend(self._word(raw))
        return out

    def encode_ids(self, text: str) -> list[int]:
        ids = self._ids
        try:
            return [ids[p] for p in self.encode_pieces(text)]
        except KeyError as e:  # pragma: no cover - would mean a broken model
            raise AssertionError(f"encoder produced piece {e.args[0]!r} missing from the vocabulary") from None

    def encode(self, text: str) -> EncodedSequence:
        pieces = self.encode_pieces(text)
        ids = self._ids
        return EncodedSequence([ids[p] for p in pieces], pieces)

    def encode_with_specials(self, text: str, *, bos: bool = False, eos: bool = False) -> list[int]:
        """Encode ``text`` and wrap it in bos/eos ids.  Plain text can never produce these ids."""
        ids = self.encode_ids(text)
        if bos:
            ids.insert(0, BOS_ID)
        if eos:
            ids.append(EOS_ID)
        return ids

    # -- decoding ----------------------------------------------------------

    def decode(self, ids: Iterable[int], *, strict: bool = True) -> str:
        kinds = self._kinds
        surfaces = self._surfaces
        n = len(surfaces)
        parts: list[str] = []
        buf = bytearray()

        def flush():
            if buf:
                try:
                    parts.append(buf.decode("utf-8", errors="strict" if strict else "replace"))
                except UnicodeDecodeError as e:
                    raise DecodeError(f"byte pieces do not form valid UTF-8: {bytes(buf)!r} ({e.reason})") from None
                buf.clear()

        for i in ids:
            if not 0 <= i < n:
                raise DecodeError(f"token id {i} out of range [0, {n})")
            kind = kinds[i]
            if kind is PieceKind.BYTE:
                buf.append(BYTE_VALUES[surfaces[i]])
                continue
            flush()
            if kind is PieceKind.SPECIAL:
                continue
            if kind is PieceKind.CODE:
                parts.append(surfaces[i])
            else:
                parts.append(surfaces[i].replace(MARKER, " "))
        flush()
        text = "".join(parts)
        if self.config.add_dummy_prefix and text.startswith(" "):
            text = text[1:]
        return text

    def decode_pieces(self, pieces: Sequence[str], *, strict: bool = True) -> str:
        ids = []
        for p in pieces:
            i = self._ids.get(p)
            if i is None:
                raise DecodeError(f"unknown piece {p!r}")
            ids.append(i)
        return self.decode(ids, strict=strict)


def get_tokenizer(model: TokenizerModel) -> Tokenizer:
    """Tokenizer cached on the model object."""
    tok = model.__dict__.get("_tokenizer")
    if tok is None:
        tok = Tokenizer(model)
        object.__setattr__(model, "_tokenizer", tok)
    return tok


def encode_pieces(model: TokenizerModel, text: str) -> list[str]:
    return get_tokenizer(model).encode_pieces(text)


def encode(model: TokenizerModel, text: str) -> EncodedSequence:
    return get_tokenizer(model).encode(text)


def decode(model: TokenizerModel, ids: Iterable[int], *, strict: bool = True) -> str:
    return get_tokenizer(model).decode(ids, strict=strict)
