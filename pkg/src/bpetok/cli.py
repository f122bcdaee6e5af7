"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or model error.  Results go to
stdout or ``--out``; diagnostics go to stderr only.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import cross_evaluate, sweep_vocab_sizes, vocab_overlap
from .codec import get_tokenizer
from .corpus import CorpusSpec, load_jsonl, sample_weighted, split_by_language, write_jsonl
from .errors import BpetokError
from .metrics import evaluate_corpus
from .model import DEFAULT_USER_SYMBOLS, FORMAT_VERSION, load_model, save_model, TrainerConfig
from .trainer import train_bpe

log = logging.getLogger("bpetok")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _write_json(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write_csv(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")


def _read_corpora(paths: list[str], lenient: bool):
    docs = []
    for p in paths:
        docs.extend(load_jsonl(p, lenient=lenient))
    return docs


def _config_from_args(args, vocab_size: int) -> TrainerConfig:
    symbols = args.user_symbol if args.user_symbol is not None else list(DEFAULT_USER_SYMBOLS)
    if args.no_user_symbols:
        symbols = []
    return TrainerConfig(
        vocabulary_size=vocab_size,
        character_coverage=args.coverage,
        split_digits=args.split_digits,
        add_dummy_prefix=args.dummy_prefix,
        byte_fallback=args.byte_fallback,
        user_defined_symbols=tuple(symbols),
        max_ws_run=args.max_ws_run,
        max_piece_length=args.max_piece_length,
        seed=args.seed,
    )


# -- subcommands -----------------------------------------------------------


def cmd_sample(args) -> int:
    spec = CorpusSpec.from_json(args.spec)
    n = write_jsonl(sample_weighted(spec, seed=args.seed, lenient=args.lenient), args.out)
    log.info("wrote %d documents to %s", n, args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    config = _config_from_args(args, args.vocab_size)
    docs = _read_corpora(args.corpus, args.lenient)
    model = train_bpe(docs, config, threads=args.threads)
    save_model(model, args.out)
    log.info("saved %d-piece model to %s", len(model), args.out)
    return EXIT_OK


def cmd_encode(args) -> int:
    tok = get_tokenizer(load_model(args.model))
    text = sys.stdin.buffer.read().decode("utf-8")
    enc = tok.encode(text)
    if args.pieces:
        sys.stdout.write(" ".join(enc.pieces) + "\n")
    else:
        sys.stdout.write(" ".join(map(str, enc.ids)) + "\n")
    return EXIT_OK


def cmd_decode(args) -> int:
    tok = get_tokenizer(load_model(args.model))
    raw = sys.stdin.read().split()
    try:
        ids = [int(x) for x in raw]
    except ValueError as e:
        raise BpetokError(f"ids must be integers: {e}") from None
    text = tok.decode(ids, strict=not args.lenient)
    sys.stdout.buffer.write(text.encode("utf-8"))
    sys.stdout.flush()
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    docs = _read_corpora(args.corpus, args.lenient)
    if args.per_language:
        reports = [
            evaluate_corpus(model, bucket, lang, threads=args.threads).to_dict()
            for lang, bucket in split_by_language(docs).items()
        ]
    else:
        label = ",".join(Path(p).stem for p in args.corpus)
        reports = [evaluate_corpus(model, docs, label, threads=args.threads).to_dict()]
    _write_json(reports, args.out)
    return EXIT_OK


def cmd_overlap(args) -> int:
    a = load_model(args.model_a)
    b = load_model(args.model_b)
    _write_json({"model_a": args.model_a, "model_b": args.model_b, "overlap": vocab_overlap(a, b)}, args.out)
    return EXIT_OK


def cmd_cross_eval(args) -> int:
    model_paths = sorted(Path(args.models).glob("*.json"))
    corpus_paths = sorted(Path(args.corpora).glob("*.jsonl"))
    if not model_paths or not corpus_paths:
        raise BpetokError(f"need at least one *.json model in {args.models} and *.jsonl corpus in {args.corpora}")
    models = {p.stem: load_model(p) for p in model_paths}
    corpora = {p.stem: list(load_jsonl(p, lenient=args.lenient)) for p in corpus_paths}
    matrix = cross_evaluate(models, corpora, threads=args.threads)
    _write_json(matrix.to_dict(), args.out)
    _write_csv(matrix.to_csv(), args.csv)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--sizes must be a comma-separated list of integers, got {args.sizes!r}") from None
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise UsageError("--sizes must be strictly increasing")
    config = _config_from_args(args, sizes[-1])
    docs = _read_corpora(args.corpus, args.lenient)
    if args.eval_corpus:
        eval_corpora = {Path(p).stem: list(load_jsonl(p, lenient=args.lenient)) for p in args.eval_corpus}
    else:
        eval_corpora = split_by_language(docs)
    references = {}
    for spec in args.reference_model or []:
        label, _, path = spec.partition("=")
        if not path:
            raise UsageError(f"--reference-model expects LABEL=PATH, got {spec!r}")
        references[label] = load_model(path)
    report = sweep_vocab_sizes(docs, eval_corpora, sizes, config, references, threads=args.threads)
    _write_json(report.to_dict(), args.out)
    _write_csv(report.to_csv(), args.csv)
    return EXIT_OK if report.complete else EXIT_DATA


# -- parser ----------------------------------------------------------------


def _add_trainer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--coverage", type=float, default=0.9999, help="character coverage (default 0.9999)")
    p.add_argument("--split-digits", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--byte-fallback", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--dummy-prefix", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--user-symbol", action="append", metavar="SYM",
                   help="protected symbol, repeatable (default: the four code-language tags)")
    p.add_argument("--no-user-symbols", action="store_true", help="train without protected symbols")
    p.add_argument("--max-ws-run", type=int, default=24)
    p.add_argument("--max-piece-length", type=int, default=16)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bpetok", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bpetok {__version__} (model format {FORMAT_VERSION})")
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--lenient", action="store_true", help="skip malformed corpus lines / bad byte runs")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", parents=[common], help="weighted Bernoulli sample of JSONL sources")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample, seed=None)

    p = sub.add_parser("train", parents=[common], help="train a BPE model")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    _add_trainer_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", parents=[common], help="encode stdin")
    p.add_argument("--model", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--ids", action="store_true", help="print token ids (default)")
    mode.add_argument("--pieces", action="store_true", help="print piece surfaces")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="decode whitespace-separated ids from stdin")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", parents=[common], help="fertility and continued-word proportion")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--per-language", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("overlap", parents=[common], help="vocabulary overlap of model A with model B")
    p.add_argument("--model-a", required=True)
    p.add_argument("--model-b", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("cross-eval", parents=[common], help="evaluate every model on every corpus")
    p.add_argument("--models", required=True, help="directory of *.json models")
    p.add_argument("--corpora", required=True, help="directory of *.jsonl corpora")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_cross_eval)

    p = sub.add_parser("sweep", parents=[common], help="train and evaluate across vocabulary sizes")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated, strictly increasing")
    p.add_argument("--eval-corpus", action="append", help="default: training corpus split by language")
    p.add_argument("--reference-model", action="append", metavar="LABEL=PATH")
    _add_trainer_flags(p)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sweep)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    logging.basicConfig(level=args.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"bpetok {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (BpetokError, OSError, ValueError) as e:
        print(f"bpetok {args.command}: {e}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
