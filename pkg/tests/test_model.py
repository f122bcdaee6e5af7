from __future__ import annotations

import json

import pytest

from bpetok.errors import LayoutError, ModelError
from bpetok.model import (
    BYTE_PIECES,
    MARKER,
    Piece,
    PieceKind,
    TokenizerModel,
    TrainerConfig,
    dumps_model,
    load_model,
    loads_model,
    model_to_dict,
    save_model,
)


def _reload(d: dict) -> TokenizerModel:
    return loads_model(json.dumps(d))


def test_save_load_round_trip(small_model, tmp_path):
    save_model(small_model, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json") == small_model


def test_resave_is_byte_identical(small_model, tmp_path):
    save_model(small_model, tmp_path / "a.json")
    save_model(load_model(tmp_path / "a.json"), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_pad_at_id_one_is_rejected(small_model):
    d = model_to_dict(small_model)
    d["pieces"][0], d["pieces"][1] = d["pieces"][1], d["pieces"][0]
    with pytest.raises(LayoutError, match="special piece order violates"):
        _reload(d)


def test_missing_last_byte_piece_is_rejected(small_model):
    d = model_to_dict(small_model)
    d["pieces"] = [p for p in d["pieces"] if p["s"] != "<0xFF>"]
    with pytest.raises(LayoutError, match="byte fallback block"):
        _reload(d)


def test_invalid_model_refuses_to_save(small_model, tmp_path):
    broken = TokenizerModel(small_model.config, small_model.pieces[:-1], small_model.merges)
    with pytest.raises(LayoutError):
        save_model(broken, tmp_path / "x.json")
    assert not (tmp_path / "x.json").exists()


def test_dangling_merge_is_rejected(small_model):
    d = model_to_dict(small_model)
    d["merges"][0] = ["zz", "qq"]
    with pytest.raises(LayoutError, match="merge rank 0"):
        _reload(d)


def test_garbage_files(tmp_path):
    with pytest.raises(ModelError):
        loads_model("[]")
    with pytest.raises(ModelError, match="not valid JSON"):
        loads_model("{")
    with pytest.raises(ModelError, match="version"):
        loads_model(json.dumps({"version": 99, "config": {}, "pieces": [], "merges": []}))


def test_lookup_examples(small_model):
    assert small_model.piece_to_id("<unk>") == 1
    assert small_model.id_to_piece(0) == Piece("<pad>", PieceKind.SPECIAL)
    assert small_model.piece_to_id("zzz-not-in-vocab") is None
    with pytest.raises(IndexError):
        small_model.id_to_piece(len(small_model))
    with pytest.raises(IndexError):
        small_model.id_to_piece(-1)


def test_piece_id_bijection(small_model):
    for i in range(len(small_model)):
        assert small_model.piece_to_id(small_model.id_to_piece(i).surface) == i


def test_block_layout(small_model):
    audit = small_model.audit()
    assert audit["byte"] == 256 and audit["whitespace_run"] == 23
    assert audit["total"] == len(small_model) == 1024
    assert [p.surface for p in small_model.block(PieceKind.BYTE)] == list(BYTE_PIECES)
    runs = small_model.block(PieceKind.WHITESPACE_RUN)
    assert [len(p.surface) for p in runs] == list(range(2, 25))
    assert all(set(p.surface) == {MARKER} for p in runs)
    assert small_model.block_range(PieceKind.WHITESPACE_RUN).stop == len(small_model)


def test_merges_are_ranked_and_match_regular_block(small_model):
    rules = small_model.merge_rules
    assert [r.rank for r in rules] == list(range(len(rules)))
    assert [r.result for r in rules] == [p.surface for p in small_model.block(PieceKind.REGULAR)]


def test_config_validation():
    with pytest.raises(ValueError):
        TrainerConfig(character_coverage=0.0)
    with pytest.raises(ValueError):
        TrainerConfig(max_ws_run=0)
    cfg = TrainerConfig(vocabulary_size=640, user_defined_symbols=("<|a|>",))
    assert TrainerConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    assert cfg.n_whitespace_runs == 23
    assert cfg.n_fixed == 4 + 1 + 256


def test_dumps_is_compact_utf8(small_model):
    text = dumps_model(small_model)
    assert MARKER in text  # not \u-escaped
    assert ", " not in text.split('"pieces"')[0]
