"""Synthetic multilingual corpora for desk-scale experiments.

Each language gets its own syllable inventory and a Zipf-distributed lexicon,
so word distributions are disjoint across languages while letters overlap.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .corpus import Document

# letters, vowels, preferred word lengths in syllables
_PROFILES: dict[str, tuple[str, str, tuple[float, ...]]] = {
    "sv": ("bdfghjklmnprstv", "aeiouyåäö", (0.25, 0.4, 0.25, 0.1)),
    "en": ("bcdfghklmnprstwy", "aeiou", (0.35, 0.35, 0.2, 0.1)),
    "no": ("bdfghjklmnprstv", "aeiouyæøå", (0.25, 0.4, 0.25, 0.1)),
    "da": ("bdfghjklmnprstv", "aeiouyæøå", (0.3, 0.35, 0.25, 0.1)),
    "is": ("bdfghjklmnprstvþð", "aáeéiíoóuúyýæö", (0.15, 0.35, 0.3, 0.2)),
}

_CODE_KEYWORDS = ["def", "return", "if", "else", "for", "in", "while", "import", "class", "None", "True", "self"]
_CODE_OPS = [" = ", " + ", " - ", " == ", " < ", ", "]

LANGUAGES = ("sv", "en", "no", "da", "is", "code")


def _seed_for(name: str, seed: int) -> np.random.Generator:
    return np.random.default_rng([zlib.crc32(name.encode()), seed])


@dataclass
class SyntheticLanguage:
    name: str
    lexicon: list[str]
    probs: np.ndarray

    def words(self, n: int, rng: np.random.Generator) -> list[str]:
        idx = rng.choice(len(self.lexicon), size=n, p=self.probs)
        lex = self.lexicon
        return [lex[i] for i in idx]


def make_language(name: str, *, lexicon_size: int = 4000, seed: int = 0, taken: set[str] | None = None,
                  zipf: float = 1.1) -> SyntheticLanguage:
    """Build a language whose lexicon avoids every word in ``taken``."""
    rng = _seed_for(name, seed)
    if name == "code":
        consonants, vowels, lengths = "bcdfgklmnprstvxz", "aeiou", (0.3, 0.4, 0.2, 0.1)
    else:
        consonants, vowels, lengths = _PROFILES[name]
    # language-specific syllables: a random subset of onset+vowel(+coda) shapes
    syllables = set()
    while len(syllables) < 60:
        s = rng.choice(list(consonants)) + rng.choice(list(vowels))
        if rng.random() < 0.4:
            s += rng.choice(list(consonants))
        syllables.add(str(s))
    syllables = sorted(syllables)
    taken = taken if taken is not None else set()
    lexicon: list[str] = []
    seen: set[str] = set()
    while len(lexicon) < lexicon_size:
        k = int(rng.choice(len(lengths), p=np.array(lengths) / sum(lengths))) + 1
        w = "".join(syllables[int(i)] for i in rng.integers(0, len(syllables), size=k))
        if name == "code" and rng.random() < 0.3:
            w = w + "_" + syllables[int(rng.integers(len(syllables)))]
        if w in seen or w in taken:
            continue
        seen.add(w)
        lexicon.append(w)
    ranks = np.arange(1, lexicon_size + 1, dtype=np.float64)
    probs = ranks ** -zipf
    probs /= probs.sum()
    return SyntheticLanguage(name, lexicon, probs)


def make_languages(names=LANGUAGES, *, lexicon_size: int = 4000, seed: int = 0) -> dict[str, SyntheticLanguage]:
    taken: set[str] = set()
    out = {}
    for name in names:
        lang = make_language(name, lexicon_size=lexicon_size, seed=seed, taken=taken)
        taken.update(lang.lexicon)
        out[name] = lang
    return out


def _prose(lang: SyntheticLanguage, rng: np.random.Generator, n_sentences: int) -> str:
    sentences = []
    for _ in range(n_sentences):
        n = int(rng.integers(4, 16))
        words = lang.words(n, rng)
        words[0] = words[0].capitalize()
        parts = []
        for i, w in enumerate(words):
            if rng.random() < 0.03:
                w = str(int(rng.integers(0, 2000)))
            if i < n - 1 and rng.random() < 0.08:
                w += ","
            parts.append(w)
        end = "." if rng.random() < 0.85 else rng.choice(["?", "!"])
        sentences.append(" ".join(parts) + end)
    return " ".join(sentences)


def _code(lang: SyntheticLanguage, rng: np.random.Generator, n_lines: int) -> str:
    lines = []
    depth = 0
    for _ in range(n_lines):
        r = rng.random()
        ident = lang.words(3, rng)
        if r < 0.15:
            depth = 0
            line = f"def {ident[0]}({ident[1]}, {ident[2]}):"
            lines.append(line)
            depth = 1
            continue
        kw = _CODE_KEYWORDS[int(rng.integers(len(_CODE_KEYWORDS)))]
        op = _CODE_OPS[int(rng.integers(len(_CODE_OPS)))]
        if r < 0.3:
            line = f"{kw} {ident[0]}{op}{ident[1]}:"
            lines.append("    " * depth + line)
            depth = min(depth + 1, 3)
            continue
        if r < 0.4:
            line = f"return {ident[0]}({ident[1]}{op}{int(rng.integers(0, 100))})"
        else:
            line = f"{ident[0]}{op}{ident[1]}.{ident[2]}({kw})"
        lines.append("    " * depth + line)
        if rng.random() < 0.2:
            depth = max(depth - 1, 0)
    return "<|python|> " + "\n".join(lines)


def generate_documents(lang: SyntheticLanguage, n_chars: int, rng: np.random.Generator) -> list[Document]:
    """Documents of ``lang`` totalling at least ``n_chars`` characters."""
    docs = []
    total = 0
    while total < n_chars:
        if lang.name == "code":
            text = _code(lang, rng, int(rng.integers(5, 30)))
            category = "code"
        else:
            text = _prose(lang, rng, int(rng.integers(3, 12)))
            category = "prose"
        docs.append(Document(text, lang.name, category))
        total += len(text)
    return docs


def desk_corpus(
    n_chars: int,
    *,
    languages=LANGUAGES,
    shares: dict[str, float] | None = None,
    seed: int = 0,
    lexicon_size: int = 4000,
) -> list[Document]:
    """Mixed-language corpus of about ``n_chars`` characters.

    ``shares`` sets each language's fraction of the text; by default languages
    get geometrically decreasing shares in the order given.
    """
    langs = make_languages(languages, lexicon_size=lexicon_size, seed=seed)
    if shares is None:
        raw = {name: 0.7 ** i for i, name in enumerate(languages)}
        total = sum(raw.values())
        shares = {k: v / total for k, v in raw.items()}
    rng = np.random.default_rng(seed)
    docs: list[Document] = []
    for name in languages:
        docs.extend(generate_documents(langs[name], int(n_chars * shares[name]), rng))
    order = rng.permutation(len(docs))
    return [docs[i] for i in order]
