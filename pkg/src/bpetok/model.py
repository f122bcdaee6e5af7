"""Tokenizer model: configuration, vocabulary layout, merge rules and the JSON model file.

The vocabulary is an ordered list of pieces split into contiguous blocks::

    special | code | byte fallback | regular | single-char | whitespace runs

Ids are 0-based positions in that list.  Regular pieces are exactly the merge
results, in merge-rank order.
"""

from __future__ import annotations

import enum
import json
import os
import re
import warnings
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from typing import Any, Iterable, Sequence

from .errors import ConfigError, LayoutError, ModelError

FORMAT_VERSION = 1

MARKER = "▁"

BYTE_PIECES: tuple[str, ...] = tuple(f"<0x{b:02X}>" for b in range(256))
BYTE_VALUES: dict[str, int] = {s: b for b, s in enumerate(BYTE_PIECES)}
_BYTE_RE = re.compile(r"<0x[0-9A-F]{2}>\Z")

DEFAULT_SPECIAL_PIECES = ("<pad>", "<unk>", "<s>", "<|endoftext|>")
DEFAULT_USER_SYMBOLS = ("<|javascript|>", "<|python|>", "<|sql|>", "<|shell|>")

PAD_ID, UNK_ID, BOS_ID, EOS_ID = 0, 1, 2, 3


class PieceKind(str, enum.Enum):
    SPECIAL = "special"
    CODE = "code"
    BYTE = "byte"
    REGULAR = "regular"
    SINGLE_CHAR = "single_char"
    WHITESPACE_RUN = "whitespace_run"


BLOCK_ORDER: tuple[PieceKind, ...] = tuple(PieceKind)
_BLOCK_INDEX = {kind: i for i, kind in enumerate(BLOCK_ORDER)}


@dataclass(frozen=True)
class Piece:
    surface: str
    kind: PieceKind

    def __str__(self) -> str:
        return self.surface


def is_byte_piece(surface: str) -> bool:
    return _BYTE_RE.match(surface) is not None


def whitespace_run_piece(length: int) -> str:
    return MARKER * length


@dataclass(frozen=True)
class TrainerConfig:
    """Training and encoding options.  Defaults reproduce the 64k multilingual setup."""

    vocabulary_size: int = 64000
    character_coverage: float = 0.9999
    split_digits: bool = True
    add_dummy_prefix: bool = True
    byte_fallback: bool = True
    user_defined_symbols: tuple[str, ...] = DEFAULT_USER_SYMBOLS
    special_pieces: tuple[str, ...] = DEFAULT_SPECIAL_PIECES
    max_ws_run: int = 24
    max_piece_length: int = 16
    seed: int = 0

    def __post_init__(self):
        # lists coming from JSON or argparse are frozen into tuples
        object.__setattr__(self, "user_defined_symbols", tuple(self.user_defined_symbols))
        object.__setattr__(self, "special_pieces", tuple(self.special_pieces))
        self.validate()

    def validate(self) -> None:
        if self.vocabulary_size <= 0:
            raise ConfigError(f"vocabulary_size must be positive, got {self.vocabulary_size}")
        if not 0 < self.character_coverage <= 1:
            raise ConfigError(f"character_coverage must be in (0, 1], got {self.character_coverage}")
        if self.max_ws_run < 1:
            raise ConfigError(f"max_ws_run must be >= 1, got {self.max_ws_run}")
        if self.max_piece_length < 1:
            raise ConfigError(f"max_piece_length must be >= 1, got {self.max_piece_length}")
        if len(self.special_pieces) != 4 or len(set(self.special_pieces)) != 4:
            raise ConfigError("special_pieces must be 4 distinct strings (pad, unk, bos, eos)")
        if any(not s for s in self.user_defined_symbols):
            raise ConfigError("user_defined_symbols must be non-empty strings")
        if len(set(self.user_defined_symbols)) != len(self.user_defined_symbols):
            raise ConfigError("user_defined_symbols contains duplicates")
        clash = set(self.user_defined_symbols) & (set(self.special_pieces) | set(BYTE_PIECES))
        if clash:
            raise ConfigError(f"user_defined_symbols collide with reserved pieces: {sorted(clash)}")

    @property
    def n_whitespace_runs(self) -> int:
        return self.max_ws_run - 1

    @property
    def n_fixed(self) -> int:
        """Size of the special, code and byte blocks."""
        return 4 + len(self.user_defined_symbols) + (256 if self.byte_fallback else 0)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["user_defined_symbols"] = list(self.user_defined_symbols)
        d["special_pieces"] = list(self.special_pieces)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TrainerConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ModelError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ModelError(f"bad config: {e}") from None


@dataclass(frozen=True)
class MergeRule:
    left: str
    right: str
    rank: int

    @property
    def result(self) -> str:
        return self.left + self.right


@dataclass(frozen=True, eq=False)
class TokenizerModel:
    """Immutable tokenizer model.  Equality is structural over config, pieces and merges."""

    config: TrainerConfig
    pieces: tuple[Piece, ...]
    merges: tuple[tuple[str, str], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "merges", tuple((l, r) for l, r in self.merges))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TokenizerModel):
            return NotImplemented
        return (self.config, self.pieces, self.merges) == (other.config, other.pieces, other.merges)

    __hash__ = object.__hash__

    def __len__(self) -> int:
        return len(self.pieces)

    @cached_property
    def _surface_to_id(self) -> dict[str, int]:
        return {p.surface: i for i, p in enumerate(self.pieces)}

    def piece_to_id(self, surface: str) -> int | None:
        return self._surface_to_id.get(surface)

    def id_to_piece(self, token_id: int) -> Piece:
        if not 0 <= token_id < len(self.pieces):
            raise IndexError(f"token id {token_id} out of range [0, {len(self.pieces)})")
        return self.pieces[token_id]

    @property
    def merge_rules(self) -> list[MergeRule]:
        return [MergeRule(l, r, i) for i, (l, r) in enumerate(self.merges)]

    def block(self, kind: PieceKind) -> list[Piece]:
        return [p for p in self.pieces if p.kind is kind]

    def block_range(self, kind: PieceKind) -> range:
        ids = [i for i, p in enumerate(self.pieces) if p.kind is kind]
        if not ids:
            return range(0)
        return range(ids[0], ids[-1] + 1)

    def learned_surfaces(self) -> set[str]:
        """Regular and single-char surfaces, i.e. the data-dependent part of the vocabulary."""
        return {p.surface for p in self.pieces if p.kind in (PieceKind.REGULAR, PieceKind.SINGLE_CHAR)}

    def with_config(self, **changes) -> TokenizerModel:
        return TokenizerModel(replace(self.config, **changes), self.pieces, self.merges)

    def validate(self) -> None:
        validate_layout(self)

    def audit(self) -> dict[str, int]:
        """Count pieces per block, after checking the layout."""
        validate_layout(self)
        counts = {kind.value: 0 for kind in BLOCK_ORDER}
        for p in self.pieces:
            counts[p.kind.value] += 1
        counts["total"] = len(self.pieces)
        return counts


def assemble_pieces(
    config: TrainerConfig,
    merges: Sequence[tuple[str, str]],
    alphabet: Sequence[str],
    whitespace_runs: Iterable[int] = (),
) -> list[Piece]:
    """Lay out a vocabulary in block order from its parts."""
    pieces = [Piece(s, PieceKind.SPECIAL) for s in config.special_pieces]
    pieces += [Piece(s, PieceKind.CODE) for s in config.user_defined_symbols]
    if config.byte_fallback:
        pieces += [Piece(s, PieceKind.BYTE) for s in BYTE_PIECES]
    pieces += [Piece(l + r, PieceKind.REGULAR) for l, r in merges]
    pieces += [Piece(c, PieceKind.SINGLE_CHAR) for c in alphabet]
    pieces += [Piece(whitespace_run_piece(n), PieceKind.WHITESPACE_RUN) for n in whitespace_runs]
    return pieces


def _is_digit(ch: str) -> bool:
    return ch.isdecimal()


def validate_layout(model: TokenizerModel) -> None:
    """Raise :class:`LayoutError` unless every vocabulary and merge invariant holds."""
    cfg = model.config
    pieces = model.pieces

    seen: set[str] = set()
    for i, p in enumerate(pieces):
        if not isinstance(p.kind, PieceKind):
            raise LayoutError(f"piece {i} has unknown kind {p.kind!r}")
        if not p.surface:
            raise LayoutError(f"piece {i} has an empty surface")
        if p.surface in seen:
            raise LayoutError(f"duplicate surface {p.surface!r} at id {i}")
        seen.add(p.surface)

    last = 0
    for i, p in enumerate(pieces):
        idx = _BLOCK_INDEX[p.kind]
        if idx < last:
            raise LayoutError(f"piece {i} ({p.kind.value}) is out of block order")
        last = idx

    specials = tuple(p.surface for p in pieces if p.kind is PieceKind.SPECIAL)
    if specials != cfg.special_pieces or pieces[:4] != tuple(Piece(s, PieceKind.SPECIAL) for s in specials):
        raise LayoutError(
            "special piece order violates the pad/unk/bos/eos layout: "
            f"expected {list(cfg.special_pieces)} at ids 0-3, found {list(specials)}"
        )

    codes = tuple(p.surface for p in pieces if p.kind is PieceKind.CODE)
    if codes != cfg.user_defined_symbols:
        raise LayoutError(f"code block {list(codes)} does not match user_defined_symbols")

    byte_block = [p.surface for p in pieces if p.kind is PieceKind.BYTE]
    expected_bytes = list(BYTE_PIECES) if cfg.byte_fallback else []
    if byte_block != expected_bytes:
        missing = sorted(set(expected_bytes) - set(byte_block))
        raise LayoutError(
            f"byte fallback block must hold {len(expected_bytes)} pieces <0x00>..<0xFF> in order, "
            f"found {len(byte_block)}" + (f" (missing {missing[:4]})" if missing else "")
        )

    singles = [p.surface for p in pieces if p.kind is PieceKind.SINGLE_CHAR]
    for s in singles:
        if len(s) != 1:
            raise LayoutError(f"single-char piece {s!r} has length {len(s)}")

    regular = [p.surface for p in pieces if p.kind is PieceKind.REGULAR]
    if len(regular) != len(model.merges):
        raise LayoutError(f"{len(model.merges)} merges but {len(regular)} regular pieces")
    known = set(singles)
    for rank, ((left, right), surface) in enumerate(zip(model.merges, regular)):
        if left not in known or right not in known:
            raise LayoutError(f"merge rank {rank} ({left!r}, {right!r}) uses a piece not learned before it")
        if left + right != surface:
            raise LayoutError(
                f"merge rank {rank} result {left + right!r} is dangling: regular block has {surface!r}"
            )
        if len(surface) > cfg.max_piece_length:
            raise LayoutError(f"regular piece {surface!r} exceeds max_piece_length {cfg.max_piece_length}")
        if cfg.split_digits and any(_is_digit(c) for c in surface):
            raise LayoutError(f"regular piece {surface!r} contains a digit while split_digits is on")
        known.add(surface)

    runs = [p.surface for p in pieces if p.kind is PieceKind.WHITESPACE_RUN]
    expected_runs = [whitespace_run_piece(n) for n in range(2, cfg.max_ws_run + 1)]
    if runs != expected_runs:
        raise LayoutError(
            f"whitespace-run block must hold lengths 2..{cfg.max_ws_run}, found lengths {[len(r) for r in runs]}"
        )

    if len(pieces) != cfg.vocabulary_size:
        raise LayoutError(f"vocabulary has {len(pieces)} pieces, config says {cfg.vocabulary_size}")
    if cfg.vocabulary_size % 128:
        warnings.warn(f"vocabulary size {cfg.vocabulary_size} is not divisible by 128", stacklevel=3)


def model_to_dict(model: TokenizerModel) -> dict[str, Any]:
    return {
        "version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "pieces": [{"s": p.surface, "k": p.kind.value} for p in model.pieces],
        "merges": [[l, r] for l, r in model.merges],
    }


def dumps_model(model: TokenizerModel) -> str:
    """Canonical JSON: sorted keys, no insignificant whitespace, raw UTF-8."""
    return json.dumps(model_to_dict(model), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def model_from_dict(d: Any) -> TokenizerModel:
    if not isinstance(d, dict):
        raise ModelError("model file must contain a JSON object")
    missing = {"version", "config", "pieces", "merges"} - set(d)
    if missing:
        raise ModelError(f"model file missing keys: {sorted(missing)}")
    if d["version"] != FORMAT_VERSION:
        raise ModelError(f"unsupported model version {d['version']!r}, expected {FORMAT_VERSION}")
    if not isinstance(d["config"], dict):
        raise ModelError("config must be an object")
    try:
        config = TrainerConfig.from_dict(d["config"])
    except ConfigError as e:
        raise ModelError(f"bad config: {e}") from None
    try:
        pieces = [Piece(p["s"], PieceKind(p["k"])) for p in d["pieces"]]
        merges = [(l, r) for l, r in d["merges"]]
    except (KeyError, TypeError, ValueError) as e:
        raise ModelError(f"malformed pieces or merges: {e}") from None
    if not all(isinstance(p.surface, str) for p in pieces):
        raise ModelError("piece surfaces must be strings")
    if not all(isinstance(l, str) and isinstance(r, str) for l, r in merges):
        raise ModelError("merge entries must be pairs of strings")
    return TokenizerModel(config, tuple(pieces), tuple(merges))


def loads_model(text: str) -> TokenizerModel:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"model file is not valid JSON: {e}") from None
    model = model_from_dict(d)
    validate_layout(model)
    return model


def save_model(model: TokenizerModel, path: str | os.PathLike) -> None:
    validate_layout(model)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_model(model))


def load_model(path: str | os.PathLike) -> TokenizerModel:
    with open(path, "r", encoding="utf-8") as f:
        return loads_model(f.read())
