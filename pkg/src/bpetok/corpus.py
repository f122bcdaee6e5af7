"""JSONL corpora: loading, weighted Bernoulli sampling and language splits."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError, CorpusError

log = logging.getLogger(__name__)

UNKNOWN = "unknown"


@dataclass(frozen=True)
class Document:
    text: str
    language: str = UNKNOWN
    category: str = UNKNOWN

    def __post_init__(self):
        if not self.language:
            raise ValueError("language tag must be non-empty")

    def to_json(self) -> str:
        return json.dumps({"text": self.text, "lang": self.language, "category": self.category}, ensure_ascii=False)


@dataclass(frozen=True)
class Source:
    path: str
    language: str | None = None
    category: str | None = None
    weight: float = 1.0


@dataclass(frozen=True)
class CorpusSpec:
    """Weighted sources to sample from.

    A document of a source with weight ``w`` is kept with probability
    ``min(1, w * sampling_fraction)``; weights are multipliers, so weight 1
    keeps a source at its natural rate.
    """

    sources: tuple[Source, ...]
    sampling_fraction: float = 0.01
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        for s in self.sources:
            if s.weight < 0:
                raise ConfigError(f"source {s.path!r} has negative weight {s.weight}")
        if self.sources and sum(s.weight for s in self.sources) <= 0:
            raise ConfigError("source weights must sum to a positive value")
        if not 0 < self.sampling_fraction <= 1:
            raise ConfigError(f"sampling_fraction must be in (0, 1], got {self.sampling_fraction}")

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> CorpusSpec:
        """Read a spec file; relative source paths resolve against the spec's directory."""
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read corpus spec {path}: {e}") from None
        base = path.parent
        try:
            sources = [
                Source(
                    path=str(base / s["path"]),
                    language=s.get("language", s.get("lang")),
                    category=s.get("category"),
                    weight=float(s.get("weight", 1.0)),
                )
                for s in raw["sources"]
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad source entry in {path}: {e}") from None
        return cls(tuple(sources), float(raw.get("sampling_fraction", 0.01)), int(raw.get("seed", 0)))


def _parse_line(raw: bytes, lineno: int, default_language: str, default_category: str) -> Document:
    try:
        line = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise CorpusError("invalid UTF-8", lineno) from None
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusError(f"malformed JSON ({e.msg})", lineno) from None
    if not isinstance(obj, dict):
        raise CorpusError("line is not a JSON object", lineno)
    if "text" not in obj:
        raise CorpusError("missing text field", lineno)
    text = obj["text"]
    if not isinstance(text, str):
        raise CorpusError("text field is not a string", lineno)
    lang = obj.get("lang") or default_language
    category = obj.get("category") or default_category
    return Document(text, str(lang), str(category))


def load_jsonl(
    path: str | os.PathLike,
    *,
    lenient: bool = False,
    default_language: str = UNKNOWN,
    default_category: str = UNKNOWN,
) -> Iterator[Document]:
    """Yield documents from a JSONL file in file order.

    Blank lines are ignored.  Bad lines raise :class:`CorpusError` carrying the
    line number, or are logged and skipped when ``lenient`` is set.
    """
    try:
        f = open(path, "rb")
    except OSError as e:
        raise CorpusError(f"cannot read {path}: {e.strerror}", path=str(path)) from None
    with f:
        for lineno, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                yield _parse_line(raw.rstrip(b"\r\n"), lineno, default_language, default_category)
            except CorpusError as e:
                e.path = str(path)
                if not lenient:
                    raise
                log.warning("%s: skipping %s", path, e)


def write_jsonl(docs: Iterable[Document], path: str | os.PathLike) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for doc in docs:
            f.write(doc.to_json())
            f.write("\n")
            n += 1
    return n


def inclusion_probability(weight: float, sampling_fraction: float) -> float:
    return min(1.0, weight * sampling_fraction)


def sample_weighted(spec: CorpusSpec, *, seed: int | None = None, lenient: bool = False) -> Iterator[Document]:
    """Stream a weighted Bernoulli sample of all sources.

    Output order is (source index, line number).  Each source draws from its
    own generator seeded by ``(seed, source index)``, so the sample of one
    source does not depend on the others.
    """
    seed = spec.seed if seed is None else seed
    for index, source in enumerate(spec.sources):
        p = inclusion_probability(source.weight, spec.sampling_fraction)
        rng = np.random.default_rng([seed, index])
        docs = load_jsonl(
            source.path,
            lenient=lenient,
            default_language=source.language or UNKNOWN,
            default_category=source.category or UNKNOWN,
        )
        for doc in docs:
            if p >= 1.0 or rng.random() < p:
                yield doc


def split_by_language(corpus: Iterable[Document]) -> dict[str, list[Document]]:
    """Partition documents by language tag; keys come back sorted."""
    buckets: dict[str, list[Document]] = {}
    for doc in corpus:
        buckets.setdefault(doc.language, []).append(doc)
    return {lang: buckets[lang] for lang in sorted(buckets)}
