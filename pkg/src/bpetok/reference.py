"""Brute-force BPE used as a test oracle.

Every iteration recounts all adjacent pairs from scratch and rewrites every
word.  Quadratic and slow; it shares nothing with the incremental learner
except the eligibility rules.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Mapping


def reference_learn_merges(
    words: Mapping[tuple[str, ...], int],
    n_merges: int,
    *,
    existing: Iterable[str],
    unmergeable: Iterable[str],
    max_piece_length: int,
) -> list[tuple[str, str]]:
    state = [(list(symbols), freq) for symbols, freq in words.items()]
    vocab = set(existing)
    blocked = set(unmergeable)
    merges: list[tuple[str, str]] = []
    while len(merges) < n_merges:
        counts: dict[tuple[str, str], int] = defaultdict(int)
        for symbols, freq in state:
            for a, b in zip(symbols, symbols[1:]):
                counts[(a, b)] += freq
        candidates = [
            (-c, a, b)
            for (a, b), c in counts.items()
            if a not in blocked
            and b not in blocked
            and len(a) + len(b) <= max_piece_length
            and a + b not in vocab
        ]
        if not candidates:
            break
        _, a, b = min(candidates)
        merges.append((a, b))
        vocab.add(a + b)
        for symbols, _ in state:
            i = 0
            while i < len(symbols) - 1:
                if symbols[i] == a and symbols[i + 1] == b:
                    symbols[i:i + 2] = [a + b]
                i += 1
    return merges
