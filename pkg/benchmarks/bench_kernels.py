"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter (the backend is fixed at import
time by ``BPETOK_DISABLE_NUMBA``).  Besides end-to-end train/eval timings the
script times the three kernels in isolation on synthetic arrays.

    python3 benchmarks/bench_kernels.py --chars 2000000 --vocab-size 8064
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_CHILD = r"""
import hashlib, json, sys, time, warnings
import numpy as np
warnings.simplefilter("ignore")
from bpetok import _kernels, TrainerConfig, train_bpe, evaluate_corpus
from bpetok.model import dumps_model
from bpetok.synthetic import desk_corpus

chars, vocab, repeats = int(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3])
out = {"backend": _kernels.backend()}

rng = np.random.default_rng(0)
lengths = rng.integers(1, 12, size=200_000).astype(np.int64)
starts = np.concatenate(([0], np.cumsum(lengths)[:-1])).astype(np.int64)
symbols = rng.integers(0, 50, size=int(lengths.sum())).astype(np.int32)
words = np.arange(len(lengths), dtype=np.int64)
cls = rng.integers(0, 4, size=1000).astype(np.int8)
opens = rng.random(1000) < 0.4
content = rng.random(1000) < 0.9
ids = rng.integers(0, 1000, size=2_000_000).astype(np.int64)

def best(fn):
    fn()  # warm-up, includes JIT compile
    times = []
    for _ in range(repeats):
        t = time.perf_counter(); fn(); times.append(time.perf_counter() - t)
    return min(times)

out["word_pairs_s"] = best(lambda: _kernels.word_pairs(symbols, starts, lengths, words))
out["apply_merge_s"] = best(lambda: _kernels.apply_merge(symbols.copy(), starts, lengths.copy(), words, 1, 2, 99))
out["word_counts_s"] = best(lambda: _kernels.word_counts(ids, cls, opens, content))

docs = desk_corpus(chars, seed=0)
t = time.perf_counter()
model = train_bpe(docs, TrainerConfig(vocabulary_size=vocab))
out["train_s"] = time.perf_counter() - t
t = time.perf_counter()
report = evaluate_corpus(model, docs)
out["eval_s"] = time.perf_counter() - t
out["model_sha1"] = hashlib.sha1(dumps_model(model).encode()).hexdigest()
out["fertility"] = report.fertility
print(json.dumps(out))
"""


def run_backend(disable_numba: bool, args) -> dict:
    env = {**os.environ, "BPETOK_DISABLE_NUMBA": "1" if disable_numba else "0"}
    proc = subprocess.run(
        [sys.executable, "-c", _CHILD, str(args.chars), str(args.vocab_size), str(args.repeats)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--chars", type=int, default=2_000_000, help="desk corpus size in characters")
    ap.add_argument("--vocab-size", type=int, default=8064)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    nb = run_backend(False, args)
    np_ = run_backend(True, args)
    keys = ["word_pairs_s", "apply_merge_s", "word_counts_s", "train_s", "eval_s"]
    print(f"{'':16}{nb['backend']:>12}{np_['backend']:>12}{'speedup':>10}")
    for k in keys:
        print(f"{k:16}{nb[k]:12.4f}{np_[k]:12.4f}{np_[k] / nb[k]:9.2f}x")
    same = nb["model_sha1"] == np_["model_sha1"] and nb["fertility"] == np_["fertility"]
    print(f"identical models and reports: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
