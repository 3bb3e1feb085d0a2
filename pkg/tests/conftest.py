import time

import numpy as np
import pytest

from reat.numerics import make_rng
from reat.rnn import RnnModel, TrainConfig, random_model, train
from reat.store import Vocabulary, encode_dataset, generate_toy_corpus

ARCHS = ("gru", "lstm", "bigru")


def small_model(arch: str, rng, vocab_size=24, embed_dim=4, hidden_dim=5, n_classes=3) -> RnnModel:
    return random_model(arch, vocab_size, embed_dim, hidden_dim, n_classes, rng)


def random_tokens(rng, vocab_size=24, min_len=1, max_len=12):
    n = int(rng.integers(min_len, max_len + 1))
    return [int(t) for t in rng.integers(0, vocab_size, size=n)]


@pytest.fixture(scope="session")
def pinned_toy():
    """The pinned desk-scale experiment: toy corpus seed 0, 2000/400 split,
    GRU d=16 d'=32 trained 20 epochs with the default config (seed 0)."""
    t0 = time.perf_counter()
    train_set, test_set = generate_toy_corpus(0, 2000, 400)
    vocab = Vocabulary.build(train_set)
    init = random_model("gru", len(vocab), 16, 32, 2, make_rng(0))
    result = train(init, encode_dataset(vocab, train_set), TrainConfig())
    return {
        "train_set": train_set,
        "test_set": test_set,
        "vocab": vocab,
        "model": result.model,
        "metrics": result.metrics,
        "train_seconds": time.perf_counter() - t0,
    }
