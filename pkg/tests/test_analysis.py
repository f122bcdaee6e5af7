from __future__ import annotations

import pytest

from bpetok.analysis import cross_evaluate, overlap_table, sweep_vocab_sizes, vocab_overlap
from bpetok.corpus import split_by_language
from bpetok.metrics import evaluate_corpus
from bpetok.model import PieceKind, TrainerConfig
from bpetok.trainer import train_bpe


def _learned(model):
    # oracle: read the two learned blocks straight off the piece list
    return {p.surface for p in model.pieces if p.kind in (PieceKind.REGULAR, PieceKind.SINGLE_CHAR)}


@pytest.fixture(scope="module")
def two_models(small_corpus):
    by_lang = split_by_language(small_corpus)
    cfg = TrainerConfig(vocabulary_size=512)
    return {"sv": train_bpe(by_lang["sv"], cfg), "en": train_bpe(by_lang["en"], cfg)}


def test_overlap_identity_and_bounds(two_models, small_model):
    for m in [*two_models.values(), small_model]:
        assert vocab_overlap(m, m) == 1.0
    table = overlap_table({**two_models, "multi": small_model})
    assert len(table) == 9
    assert all(0.0 <= v <= 1.0 for v in table.values())


def test_overlap_matches_set_oracle(two_models):
    a, b = two_models["sv"], two_models["en"]
    la, lb = _learned(a), _learned(b)
    assert vocab_overlap(a, b) == len(la & lb) / len(la)
    assert vocab_overlap(b, a) == len(la & lb) / len(lb)


def test_cross_eval_single_cell_matches_direct_call(small_model, small_corpus):
    m = cross_evaluate({"multi": small_model}, {"all": small_corpus[:50]})
    assert m.cell("multi", "all") == evaluate_corpus(small_model, small_corpus[:50], "all")


def test_cross_eval_six_by_six(small_model, small_corpus):
    corpora = split_by_language(small_corpus)
    models = {lang: small_model for lang in corpora}
    m = cross_evaluate(models, {k: v[:10] for k, v in corpora.items()}, threads=2)
    assert len(m.cells) == 6 and all(len(row) == 6 for row in m.cells)
    assert m.cell("sv", "en") == evaluate_corpus(small_model, corpora["en"][:10], "en")
    csv_lines = m.to_csv().splitlines()
    assert len(csv_lines) == 37 and csv_lines[0].startswith("model,corpus,fertility")


def test_best_model_per_corpus(two_models, small_corpus):
    corpora = {k: v for k, v in split_by_language(small_corpus).items() if k in two_models}
    m = cross_evaluate(two_models, corpora)
    assert m.best_model_per_corpus() == {"en": "en", "sv": "sv"}


def test_sweep_single_size_equals_direct(small_corpus):
    cfg = TrainerConfig(vocabulary_size=512)
    evals = {"all": small_corpus[:60]}
    report = sweep_vocab_sizes(small_corpus, evals, [512], cfg)
    assert report.complete and report.sizes == [512]
    direct = train_bpe(small_corpus, cfg)
    assert report.models[0] == direct
    assert report.rows[0].reports["all"] == evaluate_corpus(direct, evals["all"], "all")


def test_sweep_is_deterministic_and_monotone(small_corpus, two_models):
    cfg = TrainerConfig(vocabulary_size=1024)
    evals = split_by_language(small_corpus)
    run = lambda: sweep_vocab_sizes(small_corpus, evals, [512, 768, 1024], cfg, {"sv": two_models["sv"]})
    a, b = run(), run()
    assert a.to_dict() == b.to_dict()
    for lang in evals:
        series = a.series(lang)
        assert all(x >= y for x, y in zip(series, series[1:])), (lang, series)
    ov = a.overlap_series("sv")
    assert all(x <= y for x, y in zip(ov, ov[1:]))


def test_sweep_reports_training_failure(small_corpus):
    report = sweep_vocab_sizes(small_corpus, {}, [100, 200], TrainerConfig(vocabulary_size=200))
    assert not report.complete and "too small" in report.error


def test_sweep_rejects_unsorted_sizes(small_corpus):
    with pytest.raises(ValueError):
        sweep_vocab_sizes(small_corpus, {}, [1024, 512], TrainerConfig())
