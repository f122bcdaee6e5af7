"""Lossless multilingual BPE tokenizer toolkit."""

from .codec import EncodedSequence, Tokenizer, decode, encode, encode_pieces, get_tokenizer
from .corpus import CorpusSpec, Document, Source, load_jsonl, sample_weighted, split_by_language, write_jsonl
from .errors import BpetokError, ConfigError, CorpusError, DecodeError, LayoutError, ModelError, TrainingError
from .metrics import EvalReport, classify_piece, continued_proportion, evaluate_corpus, fertility
from .model import (
    FORMAT_VERSION,
    MARKER,
    MergeRule,
    Piece,
    PieceKind,
    TokenizerModel,
    TrainerConfig,
    load_model,
    save_model,
)
from .pretokenize import pretokenize
from .trainer import compute_coverage_alphabet, train_bpe, train_bpe_sizes, whitespace_surgery
from .analysis import cross_evaluate, sweep_vocab_sizes, vocab_overlap

__version__ = "0.1.0"
