"""Coarse POS tagging, regex-style phrase chunking, clause splitting, and the
combined word/phrase/clause attribution pipeline.

Chunking partitions a tag sequence into maximal noun and verb chunks:

    verb chunk:  VERB* ADV* PART* VERB+ PART*
    noun chunk:  DET? (NOUN+ (ADP|CONJ))* NOUN+

Matching is leftmost-longest over the eight-tag coarse alphabet; when both
patterns match the same length span, the noun chunk wins.  Tokens covered by
neither pattern become singleton spans, so every partition exactly covers
the input.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import TYPE_CHECKING, Sequence

from .decompose import (
    AttributionResult,
    Span,
    extract_alpha,
    reat_partition_scores,
)
from .rnn import RnnModel, forward

if TYPE_CHECKING:
    from .store import Vocabulary

__all__ = [
    "COARSE_TAGS",
    "CLAUSE_DELIMITERS",
    "HierarchicalAttribution",
    "Phrase",
    "PhrasePartition",
    "chunk",
    "clauses",
    "hierarchy",
    "normalize_tag",
    "split_on_delimiters",
    "tag",
]

COARSE_TAGS = ("VERB", "ADV", "PART", "NOUN", "DET", "ADP", "CONJ", "OTHER")
CLAUSE_DELIMITERS = frozenset({".", ",", ";", "but"})

NOUN_CHUNK = "NOUN_CHUNK"
VERB_CHUNK = "VERB_CHUNK"
SINGLETON = "SINGLETON"


def _load_map(name: str) -> dict[str, str]:
    out: dict[str, str] = {}
    text = resources.files("reat.data").joinpath(name).read_text(encoding="utf-8")
    for line in text.splitlines():
        if line.strip():
            key, value = line.split("\t")
            out.setdefault(key, value)
    return out


_TAG_MAP = _load_map("tag_map.tsv")
_CLOSED_CLASS = _load_map("closed_class_words.tsv")


def normalize_tag(raw: str) -> str:
    """Fold any external tag (PTB or universal) onto the coarse alphabet."""
    return _TAG_MAP.get(raw.upper(), "OTHER")


def _lexicon_tag(token: str) -> str:
    word = token.lower()
    if word in _CLOSED_CLASS:
        return _CLOSED_CLASS[word]
    if not any(ch.isalpha() for ch in word):
        return "OTHER"
    if word.endswith("ly") and len(word) > 3:
        return "ADV"
    if len(word) > 4 and (word.endswith("ing") or word.endswith("ed")):
        return "VERB"
    return "NOUN"


def tag(tokens: Sequence[str], gold_tags: Sequence[str] | None = None) -> tuple[str, ...]:
    """Coarse tags for a token sequence.

    Externally supplied tags are normalised onto the coarse alphabet;
    without them a small closed-class lexicon plus suffix heuristics is
    used, defaulting to NOUN.
    """
    if not tokens:
        raise ValueError("empty token sequence")
    if gold_tags is not None:
        if len(gold_tags) != len(tokens):
            raise ValueError(f"{len(gold_tags)} tags for {len(tokens)} tokens")
        return tuple(normalize_tag(t) for t in gold_tags)
    return tuple(_lexicon_tag(t) for t in tokens)


# ---------------------------------------------------------------------------
# chunking

# NFA state sets; simulate all positions of the pattern at once and record
# the last index where an accepting state was live.


def _verb_match_end(tags: Sequence[str], start: int) -> int:
    """Longest end (exclusive) of VERB* ADV* PART* VERB+ PART* at start."""
    # states: 0 leading VERB*, 1 ADV*, 2 PART*, 3 in VERB+ (accepting),
    # 4 trailing PART* (accepting)
    active = {0, 1, 2}
    best = start
    for i in range(start, len(tags)):
        t = tags[i]
        nxt = set()
        if t == "VERB":
            if 0 in active:
                nxt.update((0, 1, 2))
            if 2 in active or 3 in active:
                nxt.add(3)
        elif t == "ADV":
            if 1 in active:
                nxt.update((1, 2))
        elif t == "PART":
            if 2 in active:
                nxt.add(2)
            if 3 in active or 4 in active:
                nxt.add(4)
        if not nxt:
            break
        active = nxt
        if 3 in active or 4 in active:
            best = i + 1
    return best


def _noun_match_end(tags: Sequence[str], start: int) -> int:
    """Longest end (exclusive) of DET? (NOUN+ (ADP|CONJ))* NOUN+ at start."""
    # states: 0 before DET?, 1 after DET / loop point, 2 inside a group's
    # NOUN+ run, 3 inside the final NOUN+ (accepting)
    active = {0, 1}
    best = start
    for i in range(start, len(tags)):
        t = tags[i]
        nxt = set()
        if t == "DET":
            if 0 in active:
                nxt.add(1)
        elif t == "NOUN":
            if 1 in active:
                nxt.update((2, 3))
            if 2 in active:
                nxt.add(2)
            if 3 in active:
                nxt.add(3)
        elif t in ("ADP", "CONJ"):
            if 2 in active:
                nxt.add(1)
        if not nxt:
            break
        active = nxt
        if 3 in active:
            best = i + 1
    return best


@dataclass(frozen=True)
class Phrase:
    span: Span
    label: str


@dataclass(frozen=True)
class PhrasePartition:
    phrases: tuple[Phrase, ...]

    @property
    def spans(self) -> tuple[Span, ...]:
        return tuple(p.span for p in self.phrases)


def chunk(tags: Sequence[str]) -> PhrasePartition:
    """Partition a coarse tag sequence into noun/verb chunks and singletons."""
    if not tags:
        raise ValueError("empty tag sequence")
    phrases: list[Phrase] = []
    i = 0
    n = len(tags)
    while i < n:
        verb_end = _verb_match_end(tags, i)
        noun_end = _noun_match_end(tags, i)
        if max(verb_end, noun_end) == i:
            phrases.append(Phrase(Span(i + 1, i + 1), SINGLETON))
            i += 1
        elif noun_end >= verb_end:
            phrases.append(Phrase(Span(i + 1, noun_end), NOUN_CHUNK))
            i = noun_end
        else:
            phrases.append(Phrase(Span(i + 1, verb_end), VERB_CHUNK))
            i = verb_end
    return PhrasePartition(tuple(phrases))


# ---------------------------------------------------------------------------
# clauses


def split_on_delimiters(tokens: Sequence[str], delimiters: frozenset[str]) -> tuple[Span, ...]:
    """Cut after each delimiter token; delimiter-only segments merge into the
    following span (or the preceding one at the end of the text)."""
    if not tokens:
        raise ValueError("empty token sequence")
    cuts = []
    begin = 0
    for i, tok in enumerate(tokens):
        if tok in delimiters:
            cuts.append((begin, i + 1))
            begin = i + 1
    if begin < len(tokens):
        cuts.append((begin, len(tokens)))
    spans: list[list[int]] = []
    carry: int | None = None
    for lo, hi in cuts:
        lo = carry if carry is not None else lo
        carry = None
        if all(tokens[j] in delimiters for j in range(lo, hi)):
            carry = lo  # nothing but delimiters: merge forward
        else:
            spans.append([lo, hi])
    if carry is not None:
        if spans:
            spans[-1][1] = len(tokens)
        else:
            spans.append([carry, len(tokens)])
    return tuple(Span(lo + 1, hi) for lo, hi in spans)


def clauses(tokens: Sequence[str]) -> tuple[Span, ...]:
    """Clause partition: split at ".", ",", ";" and "but"."""
    return split_on_delimiters(tokens, CLAUSE_DELIMITERS)


# ---------------------------------------------------------------------------
# hierarchical attribution


@dataclass
class HierarchicalAttribution:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]
    target_class: int
    logit: float
    word: AttributionResult
    phrase: AttributionResult
    clause: AttributionResult

    def levels(self):
        yield "word", self.word
        yield "phrase", self.phrase
        yield "clause", self.clause


def hierarchy(
    model: RnnModel,
    vocab: "Vocabulary",
    tokens: Sequence[str],
    tags: Sequence[str] | None = None,
    target_class: int | str = "predicted",
) -> HierarchicalAttribution:
    """Word, phrase, and clause attributions from a single forward pass."""
    coarse = tag(tokens, tags)
    trace = forward(model, vocab.encode(tokens))
    if target_class == "predicted":
        cls = trace.predicted_class
    else:
        cls = int(target_class)
    alphas = extract_alpha(trace)
    n = len(tokens)
    word_spans = tuple(Span(t, t) for t in range(1, n + 1))
    word = reat_partition_scores(trace, alphas, word_spans, cls)
    phrase = reat_partition_scores(trace, alphas, chunk(coarse).spans, cls)
    clause = reat_partition_scores(trace, alphas, clauses(tokens), cls)
    return HierarchicalAttribution(
        tokens=tuple(tokens),
        tags=coarse,
        target_class=cls,
        logit=float(trace.logits[cls]),
        word=word,
        phrase=phrase,
        clause=clause,
    )
