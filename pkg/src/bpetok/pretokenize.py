"""Split raw text into units that BPE operates on.

Both training and encoding go through :func:`split_units`, so word boundaries
are identical on both sides.  A unit is ``(kind, raw)`` where ``raw`` still
uses ASCII spaces for the whitespace marker; :func:`symbolize` turns a word
into its initial symbol sequence for a given alphabet.

Unit kinds:

* ``WORD``   -- an optional single leading space followed by non-space,
  non-digit characters.  The only unit kind BPE merges inside.
* ``DIGIT``  -- one decimal digit (only when digits are split).
* ``RUN``    -- 2..max_ws_run consecutive spaces, emitted as one piece.
* ``SYMBOL`` -- a user-defined symbol, matched on the raw text.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import BYTE_PIECES, MARKER, TrainerConfig

WORD = 0
DIGIT = 1
RUN = 2
SYMBOL = 3

_SPLIT_DIGITS_RE = re.compile(r"( +)|(\d)|([^ \d]+)")
_KEEP_DIGITS_RE = re.compile(r"( +)|()([^ ]+)")


def user_symbol_pattern(symbols: Sequence[str]) -> re.Pattern | None:
    if not symbols:
        return None
    # longest first so alternation is a longest match at each position
    ordered = sorted(symbols, key=lambda s: (-len(s), s))
    return re.compile("|".join(re.escape(s) for s in ordered))


def split_user_symbols(text: str, pattern: re.Pattern | None) -> list[tuple[bool, str]]:
    """Split ``text`` into ``(is_symbol, segment)`` pairs, scanning left to right."""
    if pattern is None:
        return [(False, text)] if text else []
    out: list[tuple[bool, str]] = []
    pos = 0
    for m in pattern.finditer(text):
        if m.start() > pos:
            out.append((False, text[pos:m.start()]))
        out.append((True, m.group()))
        pos = m.end()
    if pos < len(text):
        out.append((False, text[pos:]))
    return out


class Pretokenizer:
    """Segmentation rules for one configuration."""

    def __init__(self, config: TrainerConfig):
        self.config = config
        self._symbols = user_symbol_pattern(config.user_defined_symbols)
        self._re = _SPLIT_DIGITS_RE if config.split_digits else _KEEP_DIGITS_RE

    def split_units(self, text: str) -> list[tuple[int, str]]:
        cfg = self.config
        segments = split_user_symbols(text, self._symbols)
        if cfg.add_dummy_prefix:
            if segments and not segments[0][0]:
                segments[0] = (False, " " + segments[0][1])
            else:
                segments.insert(0, (False, " "))

        max_run = cfg.max_ws_run
        units: list[tuple[int, str]] = []
        append = units.append
        for is_symbol, seg in segments:
            if is_symbol:
                append((SYMBOL, seg))
                continue
            pending = False  # one space waiting to prefix the next word
            for spaces, digit, word in self._re.findall(seg):
                if spaces:
                    k = len(spaces)
                    if max_run >= 2:
                        while k >= 2:
                            n = min(k, max_run)
                            append((RUN, " " * n))
                            k -= n
                    else:
                        for _ in range(k - 1):
                            append((WORD, " "))
                        k = 1
                    pending = k == 1
                elif digit:
                    if pending:
                        append((WORD, " "))
                        pending = False
                    append((DIGIT, digit))
                else:
                    append((WORD, " " + word if pending else word))
                    pending = False
            if pending:
                append((WORD, " "))
        return units


def symbolize(raw: str, alphabet: frozenset[str] | set[str], byte_fallback: bool, unk: str) -> tuple[str, ...]:
    """Initial symbols of a raw unit: marker for space, alphabet chars, else bytes (or unk)."""
    out: list[str] = []
    for ch in raw:
        if ch == " ":
            out.append(MARKER)
        elif ch in alphabet and ch != MARKER:
            out.append(ch)
        elif byte_fallback:
            out.extend(BYTE_PIECES[b] for b in ch.encode("utf-8"))
        else:
            out.append(unk)
    return tuple(out)


def count_units(texts: Iterable[str], config: TrainerConfig) -> Counter:
    """Frequency of every ``(kind, raw)`` unit over ``texts``."""
    pre = Pretokenizer(config)
    counts: Counter = Counter()
    for text in texts:
        counts.update(pre.split_units(text))
    return counts


def character_counts(unit_counts: Counter) -> Counter:
    """Character frequencies of the marker-transformed text, excluding user symbols.

    A literal U+2581 in the input is not counted: it is always byte-encoded so
    it cannot be confused with a space on decode.
    """
    chars: Counter = Counter()
    for (kind, raw), n in unit_counts.items():
        if kind == SYMBOL:
            continue
        for ch, c in Counter(raw).items():
            if ch == MARKER:
                continue
            chars[MARKER if ch == " " else ch] += c * n
    return chars


@dataclass(frozen=True)
class WordUnit:
    symbols: tuple[str, ...]
    frequency: int
    kind: int = WORD

    @property
    def protected(self) -> bool:
        return self.kind == SYMBOL


def pretokenize(text: str, config: TrainerConfig, alphabet: Iterable[str] | None = None) -> list[WordUnit]:
    """Units of ``text`` with frequencies, in first-occurrence order.

    Without ``alphabet`` every character is kept as itself; with one, characters
    outside it are replaced by byte pieces (or the unk piece).
    """
    alpha = None if alphabet is None else frozenset(alphabet)
    unk = config.special_pieces[1]
    counts: dict[tuple[int, tuple[str, ...]], int] = {}
    for kind, raw in Pretokenizer(config).split_units(text):
        if kind == SYMBOL:
            symbols: tuple[str, ...] = (raw,)
        elif kind == RUN:
            symbols = (MARKER * len(raw),)
        elif alpha is None:
            symbols = tuple(MARKER if c == " " else c for c in raw)
        else:
            symbols = symbolize(raw, alpha, config.byte_fallback, unk)
        key = (kind, symbols)
        counts[key] = counts.get(key, 0) + 1
    return [WordUnit(symbols, n, kind) for (kind, symbols), n in counts.items()]
