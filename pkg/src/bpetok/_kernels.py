"""Hot loops of training and evaluation, over flat int32 arrays.

Each kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version.  Both return identical results.  Set ``BPETOK_DISABLE_NUMBA=1`` to
force the numpy path (also used automatically when numba is not importable).

Word storage used by the trainer: ``symbols`` holds every word back to back;
word ``w`` occupies ``symbols[starts[w] : starts[w] + lengths[w]]``.  Merges
shrink words in place, so ``starts`` never moves.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_DISABLED = os.environ.get("BPETOK_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = numba is not None and not NUMBA_DISABLED

# per-id piece classes used by the metric kernel
CLS_COUNTED = 0
CLS_PUNCT = 1
CLS_DROP = 2  # special and code pieces: invisible to word segmentation
CLS_RUN = 3  # whitespace runs: close the current word


# --------------------------------------------------------------------------
# numpy implementations


def _gather(starts, lengths, words):
    lens = lengths[words].astype(np.int64)
    total = int(lens.sum())
    owner = np.repeat(np.arange(len(words), dtype=np.int64), lens)
    first = np.cumsum(lens) - lens
    pos = starts[words].astype(np.int64)[owner] + (np.arange(total, dtype=np.int64) - first[owner])
    return owner, pos


def word_pairs_np(symbols, starts, lengths, words):
    owner, pos = _gather(starts, lengths, words)
    seq = symbols[pos]
    same = owner[:-1] == owner[1:]
    return seq[:-1][same], seq[1:][same], words[owner[:-1][same]]


def apply_merge_np(symbols, starts, lengths, words, left, right, new):
    if len(words) == 0:
        return
    owner, pos = _gather(starts, lengths, words)
    seq = symbols[pos]
    n = len(seq)
    hit = np.zeros(n, dtype=bool)
    if n > 1:
        hit[:-1] = (seq[:-1] == left) & (seq[1:] == right) & (owner[:-1] == owner[1:])
    if left == right:
        # in a run of overlapping hits keep every other one, leftmost first
        idx = np.arange(n)
        run_start = hit & ~np.concatenate(([False], hit[:-1]))
        anchor = np.maximum.accumulate(np.where(run_start, idx, 0))
        hit &= (idx - anchor) % 2 == 0
    at = np.flatnonzero(hit)
    seq[at] = new
    keep = np.ones(n, dtype=bool)
    keep[at + 1] = False
    seq = seq[keep]
    owner = owner[keep]
    new_lens = np.bincount(owner, minlength=len(words))
    first = np.cumsum(new_lens) - new_lens
    pos = starts[words].astype(np.int64)[owner] + (np.arange(len(seq)) - first[owner])
    symbols[pos] = seq
    lengths[words] = new_lens


def word_counts_np(ids, cls, opens, content):
    """Word, counted-token and split-word totals of one encoded document."""
    c = cls[ids]
    keep = c != CLS_DROP
    ids = ids[keep]
    c = c[keep]
    if len(ids) == 0:
        return 0, 0, 0
    is_run = c == CLS_RUN
    after_run = np.concatenate(([True], is_run[:-1]))
    opener = opens[ids] | after_run
    body = ~is_run
    opener = opener[body]
    counted = (c[body] == CLS_COUNTED).astype(np.int64)
    has = content[ids[body]].astype(np.int64)
    if len(opener) == 0:
        return 0, 0, 0
    word_id = np.cumsum(opener) - 1
    # pieces before the first opener cannot exist: after_run[0] is True
    n = int(word_id[-1]) + 1
    tokens = np.bincount(word_id, weights=counted, minlength=n)
    filled = np.bincount(word_id, weights=has, minlength=n) > 0
    tokens = tokens[filled]
    return int(filled.sum()), int(tokens.sum()), int((tokens >= 2).sum())


# --------------------------------------------------------------------------
# numba implementations

if numba is not None:

    @njit(cache=True)
    def word_pairs_nb(symbols, starts, lengths, words):
        total = 0
        for w in words:
            if lengths[w] > 1:
                total += lengths[w] - 1
        lefts = np.empty(total, dtype=symbols.dtype)
        rights = np.empty(total, dtype=symbols.dtype)
        owners = np.empty(total, dtype=words.dtype)
        k = 0
        for w in words:
            s = starts[w]
            for i in range(lengths[w] - 1):
                lefts[k] = symbols[s + i]
                rights[k] = symbols[s + i + 1]
                owners[k] = w
                k += 1
        return lefts, rights, owners

    @njit(cache=True)
    def apply_merge_nb(symbols, starts, lengths, words, left, right, new):
        for w in words:
            s = starts[w]
            n = lengths[w]
            i = 0
            j = 0
            while i < n:
                if i + 1 < n and symbols[s + i] == left and symbols[s + i + 1] == right:
                    symbols[s + j] = new
                    i += 2
                else:
                    symbols[s + j] = symbols[s + i]
                    i += 1
                j += 1
            lengths[w] = j

    @njit(cache=True)
    def word_counts_nb(ids, cls, opens, content):
        words = 0
        tokens = 0
        split = 0
        cur_tokens = 0
        cur_has = False
        is_open = False
        after_run = True
        for t in ids:
            c = cls[t]
            if c == CLS_DROP:
                continue
            if c == CLS_RUN:
                after_run = True
                continue
            if opens[t] or after_run or not is_open:
                if is_open and cur_has:
                    words += 1
                    tokens += cur_tokens
                    if cur_tokens >= 2:
                        split += 1
                is_open = True
                cur_tokens = 0
                cur_has = False
            after_run = False
            if c == CLS_COUNTED:
                cur_tokens += 1
            if content[t]:
                cur_has = True
        if is_open and cur_has:
            words += 1
            tokens += cur_tokens
            if cur_tokens >= 2:
                split += 1
        return words, tokens, split


if USE_NUMBA:
    word_pairs = word_pairs_nb
    apply_merge = apply_merge_nb
    word_counts = word_counts_nb
else:
    word_pairs = word_pairs_np
    apply_merge = apply_merge_np
    word_counts = word_counts_np


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def aggregate_pair_deltas(lefts, rights, weights, n_symbols):
    """Sum integer weights per (left, right) pair.

    Returns ascending pair keys with their lefts, rights and nonzero sums.
    """
    keys = lefts.astype(np.int64) * n_symbols + rights.astype(np.int64)
    if len(keys) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty, empty
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    weights = np.asarray(weights, dtype=np.int64)[order]
    bounds = np.flatnonzero(np.concatenate(([True], keys[1:] != keys[:-1])))
    uniq = keys[bounds]
    sums = np.add.reduceat(weights, bounds)
    nz = sums != 0
    uniq = uniq[nz]
    return uniq, uniq // n_symbols, uniq % n_symbols, sums[nz]
