"""Acceptance suite: one test per criterion.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
PASS/FAIL line per criterion.  Criteria 8-10 share a ~10 MB synthetic desk
corpus split by document into a training half and a held-out half.
"""

from __future__ import annotations

import random
import time
import warnings
from fractions import Fraction

import pytest
from oracles import word_run_oracle

from bpetok.analysis import cross_evaluate, sweep_vocab_sizes, vocab_overlap
from bpetok.codec import decode, encode, encode_pieces, get_tokenizer
from bpetok.corpus import split_by_language
from bpetok.metrics import continued_proportion, evaluate_corpus, fertility
from bpetok.model import MARKER, UNK_ID, PieceKind, TrainerConfig
from bpetok.reference import reference_learn_merges
from bpetok.synthetic import desk_corpus
from bpetok.trainer import prepare_corpus, train_bpe

SIZES = [1000, 2000, 4000, 8000]
MONO_SIZE = 4000
DESK_CHARS = 10_000_000


@pytest.fixture(scope="module")
def desk():
    docs = desk_corpus(DESK_CHARS, seed=0)
    train, held = docs[0::2], docs[1::2]
    return split_by_language(train), split_by_language(held), train


@pytest.fixture(scope="module")
def sweep(desk):
    by_lang, held, train = desk
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # 1000 and 2000 are not multiples of 128
        mono = {lang: train_bpe(docs, TrainerConfig(vocabulary_size=MONO_SIZE)) for lang, docs in by_lang.items()}
        report = sweep_vocab_sizes(train, by_lang, SIZES, TrainerConfig(vocabulary_size=SIZES[-1]), mono)
    assert report.complete, report.error
    return report, mono


@pytest.fixture(scope="module")
def cross(desk, sweep):
    _, held, _ = desk
    _, mono = sweep
    return cross_evaluate(mono, held)


# -- 1 ----------------------------------------------------------------------

_POOLS = [
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ",
    "åäöÅÄÖæøÆØþðÞÐáéíóúýÁÉÍÓÚÝ",
    "0123456789",
    "٠١٢٣٤٥٦٧٨٩०१२३",
    ".,;:!?'\"()[]{}-\u2013\u2014/\\@#%&*+=<>|~`^_",
    "漢字仮名交じり文中文字符한국어",
    "̧́̈̃⃝‍️",
    "🦀🎉👍🏽🇸🇪👩‍💻😀",
    " \t\n\r 　 ",
    MARKER,
]
_TOKENS = ["<|python|>", "<|sql|>", "<|shell|>", "<|javascript|>", "<s>", "<|endoftext|>", "<0x0A>"]


def _fuzz(rng: random.Random) -> str:
    parts = []
    for _ in range(rng.randint(0, 25)):
        r = rng.random()
        if r < 0.1:
            parts.append(" " * rng.randint(1, 60))
        elif r < 0.15:
            parts.append(rng.choice(_TOKENS))
        elif r < 0.2:
            cp = rng.randint(0, 0x10FFFF)
            if 0xD800 <= cp <= 0xDFFF:
                cp = 0xFFFD
            parts.append(chr(cp))
        else:
            pool = rng.choice(_POOLS)
            parts.append("".join(rng.choice(pool) for _ in range(rng.randint(1, 8))))
    return "".join(parts)


@pytest.mark.criterion(1, "losslessness on 10^4 fuzzed strings")
def test_c1_losslessness(sweep, record_property):
    report, _ = sweep
    model = report.models[-1]
    tok = get_tokenizer(model)
    rng = random.Random(2024)
    start = time.perf_counter()
    failures = []
    n = 10_000
    for _ in range(n):
        s = _fuzz(rng)
        ids = tok.encode_ids(s)
        if tok.decode(ids) != s or UNK_ID in ids:
            failures.append(s)
    elapsed = time.perf_counter() - start
    record_property("detail", f"{n} strings, {len(failures)} failures, {elapsed:.1f}s")
    assert not failures, failures[:3]
    assert elapsed < 60


# -- 2 ----------------------------------------------------------------------


def _random_corpus(rng: random.Random) -> list[str]:
    alphabet = rng.choice(["ab", "abc", "abcde", "aeiourstln", "xyz01", "ab c\nd", "åäöab"])
    texts, size = [], 0
    while size < rng.randint(100, 1000):
        word = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 9)))
        sep = rng.choice([" ", " ", " ", "  ", "\n", ", "])
        texts.append(word + sep)
        size += len(word) + len(sep)
    return ["".join(texts)[:1024]]


@pytest.mark.criterion(2, "incremental trainer equals brute-force oracle")
def test_c2_oracle_equivalence(record_property):
    rng = random.Random(7)
    start = time.perf_counter()
    total_merges = 0
    n = 60
    for i in range(n):
        corpus = _random_corpus(rng)
        cfg = TrainerConfig(
            vocabulary_size=rng.randint(60, 300),
            byte_fallback=False,
            user_defined_symbols=(),
            character_coverage=rng.choice([1.0, 1.0, 0.95]),
            max_piece_length=rng.choice([16, 16, 4]),
            split_digits=rng.random() < 0.8,
        )
        prepared = prepare_corpus(corpus, cfg)
        budget = cfg.vocabulary_size - cfg.n_fixed - len(prepared.alphabet)
        fast = prepared.learner(budget).run(budget)
        slow = reference_learn_merges(
            prepared.words,
            budget,
            existing=prepared.reserved_surfaces(),
            unmergeable=prepared.unmergeable_symbols(),
            max_piece_length=cfg.max_piece_length,
        )
        assert fast == slow, f"corpus {i} diverges: {corpus[0][:80]!r}"
        total_merges += len(fast)
    elapsed = time.perf_counter() - start
    record_property("detail", f"{n} corpora, {total_merges} merges compared, {elapsed:.1f}s")
    assert elapsed < 60


# -- 3 ----------------------------------------------------------------------


@pytest.mark.criterion(3, '"123.4" splits into single digit/punctuation pieces')
def test_c3_digits(sweep, desk, record_property):
    report, _ = sweep
    model = report.models[-1]
    pieces = encode_pieces(model, "123.4")
    # the dummy prefix cannot attach to a digit, so it is a lone marker piece
    assert pieces == [MARKER, "1", "2", "3", ".", "4"]
    for p in pieces[1:]:
        assert model.id_to_piece(model.piece_to_id(p)).kind is PieceKind.SINGLE_CHAR
    _, _, train = desk
    bare = train_bpe(train[:300], TrainerConfig(vocabulary_size=768, add_dummy_prefix=False))
    assert encode_pieces(bare, "123.4") == ["1", "2", "3", ".", "4"]
    record_property("detail", f"prefix on: {' '.join(pieces)}; prefix off: 1 2 3 . 4")


# -- 4 ----------------------------------------------------------------------


@pytest.mark.criterion(4, "newline without a vocabulary piece becomes <0x0A>")
def test_c4_newline_byte(desk, record_property):
    by_lang, _, _ = desk
    prose = [d for d in by_lang["sv"][:400] if "\n" not in d.text]
    for add_prefix, expected in [(False, ["<0x0A>"]), (True, [MARKER, "<0x0A>"])]:
        model = train_bpe(prose, TrainerConfig(vocabulary_size=768, add_dummy_prefix=add_prefix))
        assert model.piece_to_id("\n") is None
        enc = encode(model, "\n")
        assert enc.pieces == expected
        assert decode(model, enc.ids) == "\n"
        inner = encode_pieces(model, "hej\nhej")
        assert inner.count("<0x0A>") == 1 and decode(model, encode(model, "hej\nhej").ids) == "hej\nhej"
    record_property("detail", "prefix off: <0x0A>; prefix on: ▁ <0x0A>")


# -- 5 ----------------------------------------------------------------------


@pytest.mark.criterion(5, "vocabulary layout audit")
def test_c5_layout(sweep, record_property):
    report, mono = sweep
    for model in [*report.models, *mono.values()]:
        surfaces = [p.surface for p in model.pieces]
        assert surfaces[:4] == ["<pad>", "<unk>", "<s>", "<|endoftext|>"]
        bytes_ = [p.surface for p in model.pieces if p.kind is PieceKind.BYTE]
        assert bytes_ == [f"<0x{b:02X}>" for b in range(256)]
        tail = surfaces[-23:]
        assert tail == [MARKER * n for n in range(2, 25)]
        assert all(p.kind is PieceKind.WHITESPACE_RUN for p in model.pieces[-23:])
        assert len(model.pieces) == model.config.vocabulary_size
    assert [len(m) for m in report.models] == SIZES
    record_property("detail", f"{len(report.models) + len(mono)} models audited")


# -- 6 ----------------------------------------------------------------------


@pytest.mark.criterion(6, 'dummy-prefix consistency: "w" vs "x w"')
def test_c6_prefix_consistency(sweep, record_property):
    report, _ = sweep
    model = report.models[-1]
    tok = get_tokenizer(model)
    candidates = sorted(
        p.surface[1:] for p in model.block(PieceKind.REGULAR)
        if p.surface.startswith(MARKER) and MARKER not in p.surface[1:] and len(p.surface) > 1
    )
    words = random.Random(6).sample(candidates, 100)
    for w in words:
        alone = tok.encode_pieces(w)
        after = tok.encode_pieces("x " + w)
        assert after[-len(alone):] == alone, w
        assert alone == [MARKER + w]
    record_property("detail", "100 words")


# -- 7 ----------------------------------------------------------------------

_FIXTURES = [
    ("▁It ▁was ▁a ▁grey", Fraction(1), Fraction(0)),
    ("▁hum id , ▁grey", Fraction(3, 2), Fraction(1, 2)),
    ("▁hum id ▁grey", Fraction(3, 2), Fraction(1, 2)),
    ("▁fuk tig , ▁grå", Fraction(3, 2), Fraction(1, 2)),
    ("▁Swed ish ▁and ▁Norw eg ian .", Fraction(6, 3), Fraction(2, 3)),
]


@pytest.mark.criterion(7, "metric bounds and hand-segmented fixtures")
def test_c7_metrics(sweep, cross, record_property):
    for text, f, p in _FIXTURES:
        seq = text.split()
        assert word_run_oracle(seq) == (f, p)
        assert (fertility(seq), continued_proportion(seq)) == (f, p)
    report, _ = sweep
    reports = [r for row in report.rows for r in row.reports.values()]
    reports += [c for row in cross.cells for c in row]
    for r in reports:
        assert r.word_count > 0
        assert r.fertility_exact >= 1
        assert 0 <= r.continued_exact <= 1
    record_property("detail", f"{len(_FIXTURES)} fixtures, {len(reports)} evaluation reports in bounds")


# -- 8 ----------------------------------------------------------------------


@pytest.mark.criterion(8, "training-corpus fertility non-increasing over sizes 1000-8000")
def test_c8_fertility_trend(sweep, desk, record_property):
    report, _ = sweep
    _, held, _ = desk
    for lang in report.rows[0].reports:
        series = [r.reports[lang].fertility_exact for r in report.rows]
        assert all(a >= b for a, b in zip(series, series[1:])), (lang, [float(x) for x in series])
    # held-out: trend only
    held_trend = {}
    for lang, docs in held.items():
        series = [evaluate_corpus(m, docs).fertility for m in report.models]
        held_trend[lang] = all(a >= b for a, b in zip(series, series[1:]))
    en = [round(x, 3) for x in report.series("en")]
    record_property("detail", f"en train f={en}; held-out monotone in {sum(held_trend.values())}/{len(held_trend)}")


# -- 9 ----------------------------------------------------------------------


@pytest.mark.criterion(9, "overlap with same-data monolingual model non-decreasing")
def test_c9_overlap_trend(sweep, record_property):
    report, mono = sweep
    for lang in mono:
        series = report.overlap_series(lang)
        drops = [a - b for a, b in zip(series, series[1:]) if b < a]
        assert len(drops) <= 1 and all(d <= 0.01 for d in drops), (lang, series)
        for model, value in zip(report.models, series):
            assert value == vocab_overlap(mono[lang], model)
    sv = [round(x, 3) for x in report.overlap_series("sv")]
    record_property("detail", f"sv overlap={sv}")


# -- 10 ---------------------------------------------------------------------


@pytest.mark.criterion(10, "matched monolingual tokenizer has minimum fertility per column")
def test_c10_cross_eval(cross, record_property):
    assert len(cross.corpus_labels) >= 3
    for corpus in cross.corpus_labels:
        column = {m: cross.cell(m, corpus).fertility_exact for m in cross.model_labels}
        best = min(column.values())
        assert column[corpus] == best, (corpus, {k: float(v) for k, v in column.items()})
        assert sum(v == best for v in column.values()) == 1
    record_property("detail", f"{len(cross.model_labels)}x{len(cross.corpus_labels)} matrix, diagonal minimal")
