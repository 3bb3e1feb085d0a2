"""Persistence: vocabularies, the binary model file, TSV datasets, and a
deterministic toy sentiment corpus for desk-scale experiments.

Model file layout (all integers little-endian, all floats float64 LE):

    bytes 0..3   magic  b"REAT"
    u16          format version (currently 1)
    u8           architecture tag (0 = gru, 1 = lstm, 2 = bigru)
    u32 x 4      embed_dim, hidden_dim, n_classes, vocab_size
    u32          token count, then per token: u16 byte length + UTF-8 bytes
    float64[...] weight arrays, concatenated in RnnModel.param_items() order
    u32          CRC32 of everything above

Dataset TSV grammar, one record per line:

    label<TAB>token token ...[<TAB>tag tag ...]

Text is pre-tokenised on whitespace; the optional third field carries one
POS tag per token (any tagset; normalised to the coarse alphabet on load).
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .chunking import normalize_tag
from .numerics import make_rng
from .rnn import ARCHITECTURES, GruParams, LstmParams, RnnModel

__all__ = [
    "DatasetError",
    "LabeledText",
    "ModelFileError",
    "BadMagicError",
    "ChecksumError",
    "ShapeMismatchError",
    "VersionMismatchError",
    "PAD_INDEX",
    "PAD_TOKEN",
    "UNK_INDEX",
    "UNK_TOKEN",
    "TOY_NEGATIVE_WORDS",
    "TOY_POSITIVE_WORDS",
    "Vocabulary",
    "encode_dataset",
    "generate_toy_corpus",
    "load_dataset",
    "load_model",
    "load_text_embeddings",
    "save_dataset",
    "save_model",
]

MAGIC = b"REAT"
FORMAT_VERSION = 1
_ARCH_TAGS = {arch: i for i, arch in enumerate(ARCHITECTURES)}

PAD_INDEX, PAD_TOKEN = 0, "<pad>"
UNK_INDEX, UNK_TOKEN = 1, "<unk>"


class ModelFileError(Exception):
    """Base class for model-file problems."""


class BadMagicError(ModelFileError):
    pass


class VersionMismatchError(ModelFileError):
    pass


class ChecksumError(ModelFileError):
    pass


class ShapeMismatchError(ModelFileError):
    pass


class DatasetError(ValueError):
    """A dataset line failed to parse; the message names the line."""


# ---------------------------------------------------------------------------
# vocabulary


class Vocabulary:
    """Frozen token -> index map with reserved 0 = PAD and 1 = UNK."""

    def __init__(self, tokens: Sequence[str]):
        self._tokens = [PAD_TOKEN, UNK_TOKEN]
        self._index = {PAD_TOKEN: PAD_INDEX, UNK_TOKEN: UNK_INDEX}
        for tok in tokens:
            if tok not in self._index:
                self._index[tok] = len(self._tokens)
                self._tokens.append(tok)

    @classmethod
    def build(cls, texts: Iterable["LabeledText"]) -> "Vocabulary":
        """Collect tokens in first-occurrence order."""
        seen: list[str] = []
        have = set()
        for text in texts:
            for tok in text.tokens:
                if tok not in have:
                    have.add(tok)
                    seen.append(tok)
        return cls(seen)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self._tokens)

    def index(self, token: str) -> int:
        return self._index.get(token, UNK_INDEX)

    def token(self, index: int) -> str:
        return self._tokens[index]

    def encode(self, tokens: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.index(t) for t in tokens)


@dataclass(frozen=True)
class LabeledText:
    label: int
    tokens: tuple[str, ...]
    pos_tags: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.tokens:
            raise DatasetError("text has no tokens")
        if self.pos_tags is not None and len(self.pos_tags) != len(self.tokens):
            raise DatasetError(
                f"{len(self.pos_tags)} tags for {len(self.tokens)} tokens"
            )


def encode_dataset(
    vocab: Vocabulary, texts: Sequence[LabeledText]
) -> list[tuple[tuple[int, ...], int]]:
    return [(vocab.encode(t.tokens), t.label) for t in texts]


# ---------------------------------------------------------------------------
# model file


def _cell_array_shapes(arch: str, embed_dim: int, hidden_dim: int):
    cls = LstmParams if arch == "lstm" else GruParams
    names = [f.name for f in cls.__dataclass_fields__.values()]  # type: ignore[attr-defined]
    shapes = []
    for name in names:
        if name.startswith("b_"):
            shapes.append((name, (hidden_dim,)))
        elif name.endswith("x"):
            shapes.append((name, (hidden_dim, embed_dim)))
        else:
            shapes.append((name, (hidden_dim, hidden_dim)))
    return cls, shapes


def save_model(model: RnnModel, vocab: Vocabulary, path: str | Path) -> None:
    model.validate()
    if len(vocab) != model.vocab_size:
        raise ShapeMismatchError(
            f"vocabulary has {len(vocab)} entries, embedding {model.vocab_size} rows"
        )
    parts = [MAGIC]
    parts.append(struct.pack("<HB", FORMAT_VERSION, _ARCH_TAGS[model.architecture]))
    parts.append(
        struct.pack(
            "<IIII", model.embed_dim, model.hidden_dim, model.n_classes, model.vocab_size
        )
    )
    parts.append(struct.pack("<I", len(vocab)))
    for tok in vocab.tokens:
        raw = tok.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    for _, arr in model.param_items():
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    body = b"".join(parts)
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def load_model(path: str | Path) -> tuple[RnnModel, Vocabulary]:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a model file (bad magic)")
    if len(data) < 7:
        raise ChecksumError(f"{path}: file truncated")
    version, arch_tag = struct.unpack_from("<HB", data, 4)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}"
        )
    if zlib.crc32(data[:-4]) != struct.unpack_from("<I", data, len(data) - 4)[0]:
        raise ChecksumError(f"{path}: checksum mismatch (corrupt or truncated file)")
    archs = {v: k for k, v in _ARCH_TAGS.items()}
    if arch_tag not in archs:
        raise ShapeMismatchError(f"{path}: unknown architecture tag {arch_tag}")
    arch = archs[arch_tag]
    off = 7
    embed_dim, hidden_dim, n_classes, vocab_size = struct.unpack_from("<IIII", data, off)
    off += 16
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    if count != vocab_size:
        raise ShapeMismatchError(f"{path}: {count} vocabulary entries, header says {vocab_size}")
    tokens = []
    for _ in range(count):
        (n,) = struct.unpack_from("<H", data, off)
        off += 2
        tokens.append(data[off : off + n].decode("utf-8"))
        off += n
    if tokens[:2] != [PAD_TOKEN, UNK_TOKEN]:
        raise ShapeMismatchError(f"{path}: reserved vocabulary entries missing")
    vocab = Vocabulary(tokens[2:])
    if len(vocab) != vocab_size:
        raise ShapeMismatchError(f"{path}: duplicate vocabulary entries")

    def take(shape) -> np.ndarray:
        nonlocal off
        n_bytes = int(np.prod(shape)) * 8
        if off + n_bytes > len(data) - 4:
            raise ShapeMismatchError(f"{path}: weight payload shorter than declared shapes")
        arr = np.frombuffer(data, dtype="<f8", count=int(np.prod(shape)), offset=off)
        off += n_bytes
        return arr.reshape(shape).astype(np.float64)

    embedding = take((vocab_size, embed_dim))
    cls, shapes = _cell_array_shapes(arch, embed_dim, hidden_dim)
    n_cells = 2 if arch == "bigru" else 1
    cells = []
    for _ in range(n_cells):
        cells.append(cls(**{name: take(shape) for name, shape in shapes}))
    final_dim = 2 * hidden_dim if arch == "bigru" else hidden_dim
    w_out = take((n_classes, final_dim))
    if off != len(data) - 4:
        raise ShapeMismatchError(f"{path}: {len(data) - 4 - off} unexpected trailing bytes")
    model = RnnModel(architecture=arch, embedding=embedding, cells=tuple(cells), w_out=w_out)
    model.validate()
    return model, vocab


# ---------------------------------------------------------------------------
# datasets


def load_dataset(path: str | Path, max_len: int | None = None) -> list[LabeledText]:
    """Parse a TSV dataset; ``max_len`` drops texts with more tokens."""
    out: list[LabeledText] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) not in (2, 3):
                raise DatasetError(f"{path}:{lineno}: expected 2 or 3 tab-separated fields")
            try:
                label = int(cols[0])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: label {cols[0]!r} is not an integer")
            tokens = tuple(cols[1].split())
            if not tokens:
                raise DatasetError(f"{path}:{lineno}: empty text")
            tags = None
            if len(cols) == 3:
                raw = cols[2].split()
                if len(raw) != len(tokens):
                    raise DatasetError(
                        f"{path}:{lineno}: {len(raw)} tags for {len(tokens)} tokens"
                    )
                tags = tuple(normalize_tag(t) for t in raw)
            if max_len is not None and len(tokens) > max_len:
                continue
            out.append(LabeledText(label=label, tokens=tokens, pos_tags=tags))
    return out


def save_dataset(path: str | Path, texts: Sequence[LabeledText]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for text in texts:
            cols = [str(text.label), " ".join(text.tokens)]
            if text.pos_tags is not None:
                cols.append(" ".join(text.pos_tags))
            fh.write("\t".join(cols) + "\n")


def load_text_embeddings(
    path: str | Path, vocab: Vocabulary, dim: int, rng: np.random.Generator, scale: float = 0.08
) -> np.ndarray:
    """Embedding table seeded from a "token v1 ... vd" text file.

    Tokens absent from the file (including UNK) keep random rows drawn from
    ``rng``, mirroring random init for out-of-table words.
    """
    table = rng.uniform(-scale, scale, size=(len(vocab), dim))
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise DatasetError(f"{path}:{lineno}: expected token + {dim} floats")
            if parts[0] in vocab:
                try:
                    table[vocab.index(parts[0])] = [float(x) for x in parts[1:]]
                except ValueError:
                    raise DatasetError(f"{path}:{lineno}: non-numeric embedding value")
    return table


# ---------------------------------------------------------------------------
# toy corpus

TOY_POSITIVE_WORDS = frozenset(
    """good great wonderful excellent charming delightful brilliant refreshing
    superb enjoyable laughs""".split()
)
TOY_NEGATIVE_WORDS = frozenset(
    """bad terrible awful dreadful boring tedious dull ridiculous horrible
    absurd nonsense""".split()
)

_DETS = ["the", "a", "this"]
_NOUNS = ["film", "movie", "plot", "story", "cast", "script", "acting", "ending", "scene",
          "director"]
_COPULAS = ["is", "was", "seems", "feels", "looks"]
_ADVERBS = ["very", "really", "quite"]
_POSITIVE = sorted(TOY_POSITIVE_WORDS - {"laughs"})
_NEGATIVE = sorted(TOY_NEGATIVE_WORDS - {"nonsense"})
_NEGATORS = ["not", "n't"]
_TRANSITIVES = ["offers", "delivers"]


def _pick(rng: np.random.Generator, items: list[str]) -> str:
    return items[int(rng.integers(len(items)))]


def _sentiment(rng, positive, negated):
    """Tokens/tags for "[not] [adv] word" with post-negation polarity fixed."""
    word_positive = positive if not negated else not positive
    word = _pick(rng, _POSITIVE if word_positive else _NEGATIVE)
    toks, tags = [], []
    if negated:
        toks.append(_pick(rng, _NEGATORS))
        tags.append("ADV")
    if rng.random() < 0.3:
        toks.append(_pick(rng, _ADVERBS))
        tags.append("ADV")
    toks.append(word)
    tags.append("OTHER")
    return toks, tags


def _clause(rng, positive, allow_negation=True):
    """One "det noun cop ..." clause with the requested polarity."""
    toks = [_pick(rng, _DETS), _pick(rng, _NOUNS), _pick(rng, _COPULAS)]
    tags = ["DET", "NOUN", "VERB"]
    negated = allow_negation and rng.random() < 0.35
    s_toks, s_tags = _sentiment(rng, positive, negated)
    return toks + s_toks, tags + s_tags


def _noun_object(rng, positive):
    """"det noun verb lot of laughs|nonsense" exercising ADP noun chunks."""
    obj = "laughs" if positive else "nonsense"
    toks = [_pick(rng, _DETS), _pick(rng, _NOUNS), _pick(rng, _TRANSITIVES), "lot", "of", obj]
    tags = ["DET", "NOUN", "VERB", "NOUN", "ADP", "NOUN"]
    return toks, tags


def _toy_text(rng: np.random.Generator, label: int) -> LabeledText:
    positive = label == 1
    family = rng.random()
    if family < 0.30:
        toks, tags = _clause(rng, positive)
    elif family < 0.42:
        # coordinated pair of same-polarity sentiment words
        toks, tags = _clause(rng, positive)
        extra, extra_tags = _sentiment(rng, positive, negated=False)
        toks += ["and"] + extra
        tags += ["CONJ"] + extra_tags
    elif family < 0.62:
        # two clauses of equal polarity joined by a comma
        a_toks, a_tags = _clause(rng, positive)
        b_toks, b_tags = _clause(rng, positive)
        toks = a_toks + [","] + b_toks
        tags = a_tags + ["OTHER"] + b_tags
    elif family < 0.90:
        # contrastive: opposite-polarity opener, the clause after "but" wins
        a_toks, a_tags = _clause(rng, not positive, allow_negation=False)
        b_toks, b_tags = _clause(rng, positive)
        toks = a_toks + ["but"] + b_toks
        tags = a_tags + ["CONJ"] + b_tags
    else:
        toks, tags = _noun_object(rng, positive)
    if rng.random() < 0.6:
        toks.append(".")
        tags.append("OTHER")
    return LabeledText(label=label, tokens=tuple(toks), pos_tags=tuple(tags))


def _toy_split(rng: np.random.Generator, n: int) -> list[LabeledText]:
    texts = [_toy_text(rng, int(rng.integers(0, 2))) for _ in range(n)]
    if n >= 20:
        # keep the label mix inside 45-55%; resample with fresh draws if not
        for _ in range(100):
            share = sum(t.label for t in texts) / n
            if 0.45 <= share <= 0.55:
                break
            texts = [_toy_text(rng, int(rng.integers(0, 2))) for _ in range(n)]
    return texts


def generate_toy_corpus(
    seed: int, n_train: int, n_test: int
) -> tuple[list[LabeledText], list[LabeledText]]:
    """Deterministic template corpus with gold coarse POS tags.

    Labels follow the sentiment words after negation flips ("not terrible"
    counts as positive); contrastive texts put opposite polarities around
    "but" and the clause after "but" decides the label.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("corpus sizes must be >= 1")
    rng = make_rng(seed)
    train_rng, test_rng = rng.spawn(2)
    return _toy_split(train_rng, n_train), _toy_split(test_rng, n_test)
