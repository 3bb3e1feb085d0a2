"""Quantitative harnesses: faithfulness, interpretability, per-POS score
distributions, and attribution-guided synonym swaps.

All metrics attribute toward the model's own predicted class except
interpretability, which by definition looks at scores toward the positive
class.  Deletion for faithfulness removes the unit's tokens outright; no
placeholder is inserted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .chunking import CLAUSE_DELIMITERS, clauses, split_on_delimiters, tag
from .decompose import (
    Span,
    baseline_attribute,
    extract_alpha,
    naive_scores,
    reat_phrase_score,
    reat_word_scores,
)
from .numerics import make_rng
from .rnn import RnnModel, forward
from .store import LabeledText, Vocabulary

__all__ = [
    "AttackOutcome",
    "AttackReport",
    "EvalReport",
    "SentimentLexicons",
    "TagStats",
    "adversarial_swap",
    "faithfulness",
    "interpretability",
    "make_attributor",
    "match_ratio",
    "mean_probability_drop",
    "pos_distribution",
]

SENTENCE_DELIMITERS = frozenset({".", "!", "?"})


@dataclass(frozen=True)
class SentimentLexicons:
    """Disjoint lowercase word sets with known polarity."""

    positive: frozenset[str]
    negative: frozenset[str]

    def __post_init__(self):
        for name, words in (("positive", self.positive), ("negative", self.negative)):
            bad = [w for w in words if w != w.lower()]
            if bad:
                raise ValueError(f"{name} lexicon has non-lowercase entries: {bad[:3]}")
        overlap = self.positive & self.negative
        if overlap:
            raise ValueError(f"lexicons overlap: {sorted(overlap)[:3]}")

    @classmethod
    def from_files(cls, positive_path, negative_path) -> "SentimentLexicons":
        def read(path):
            words = Path(path).read_text(encoding="utf-8").split()
            return frozenset(w.lower() for w in words)

        return cls(positive=read(positive_path), negative=read(negative_path))


@dataclass
class EvalReport:
    metric: str
    method: str
    score: float | None
    per_item: list[dict]
    skipped: int = 0
    clamp_count: int = 0
    dataset_id: str = ""
    model_id: str = ""
    extras: dict = field(default_factory=dict)

    def record_lines(self) -> list[str]:
        return [json.dumps(item) for item in self.per_item]

    def summary_table(self) -> str:
        lines = [
            f"metric          {self.metric}",
            f"method          {self.method}",
            f"items           {len(self.per_item)} (skipped {self.skipped})",
        ]
        if self.dataset_id:
            lines.insert(1, f"dataset         {self.dataset_id}")
        if self.model_id:
            lines.insert(1, f"model           {self.model_id}")
        if self.score is not None:
            lines.append(f"score           {self.score:.6f}")
        if self.clamp_count:
            lines.append(f"clamped traces  {self.clamp_count}")
        for stats in self.extras.get("tags", []):
            lines.append(
                f"  {stats.tag:<6} n={stats.count:<5} median={stats.median:+.4f} "
                f"mean={stats.mean:+.4f} iqr=[{stats.q1:+.4f}, {stats.q3:+.4f}] "
                f"outliers={len(stats.outliers)}"
            )
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# span attributors

Attributor = Callable[[RnnModel, Vocabulary, Sequence[str], int, Sequence[Span]], np.ndarray]


class _ReatAttributor:
    def __init__(self, use_alpha: bool = True):
        self.use_alpha = use_alpha
        self.method = "reat" if use_alpha else "naive"
        self.clamp_count = 0

    def __call__(self, model, vocab, tokens, target_class, spans):
        trace = forward(model, vocab.encode(tokens))
        if self.use_alpha:
            alpha = extract_alpha(trace)
            if alpha.clamp_fired:
                self.clamp_count += 1
            return np.array(
                [reat_phrase_score(trace, alpha, s, target_class) for s in spans]
            )
        word = naive_scores(trace, target_class)
        return np.array([float(np.sum(word.scores[s.q - 1 : s.r])) for s in spans])


class _WordSumAttributor:
    def __init__(self, method: str, steps: int = 50):
        self.method = method
        self.steps = steps
        self.clamp_count = 0

    def __call__(self, model, vocab, tokens, target_class, spans):
        result = baseline_attribute(
            self.method, model, vocab.encode(tokens), target_class, steps=self.steps
        )
        return np.array([float(np.sum(result.scores[s.q - 1 : s.r])) for s in spans])


class _RandomAttributor:
    def __init__(self, seed: int):
        self.rng = make_rng(seed)
        self.method = "random"
        self.clamp_count = 0

    def __call__(self, model, vocab, tokens, target_class, spans):
        return self.rng.uniform(0.0, 1.0, size=len(spans))


class _ConstantAttributor:
    method = "constant"
    clamp_count = 0

    def __call__(self, model, vocab, tokens, target_class, spans):
        return np.zeros(len(spans))


def make_attributor(method: str, seed: int = 0, steps: int = 50) -> Attributor:
    """Span-scoring callables shared by all harnesses.

    "reat" and "naive" use the additive decomposition (phrase formula or
    summed difference scores); the gradient/perturbation baselines sum their
    word scores inside each span; "random" draws uniform scores from its own
    seeded stream and "constant" scores every span equally.
    """
    if method == "reat":
        return _ReatAttributor(use_alpha=True)
    if method == "naive":
        return _ReatAttributor(use_alpha=False)
    if method in ("vanilla_grad", "integrated_grad", "grad_input", "occlusion", "omission"):
        return _WordSumAttributor(method, steps=steps)
    if method == "random":
        return _RandomAttributor(seed)
    if method == "constant":
        return _ConstantAttributor()
    raise ValueError(f"unknown attribution method: {method!r}")


# ---------------------------------------------------------------------------
# metrics


def mean_probability_drop(drops: Sequence[float]) -> float:
    """Aggregate a faithfulness run: mean per-text probability drop."""
    if len(drops) == 0:
        raise ValueError("no drops to aggregate")
    return float(np.mean(np.asarray(drops, dtype=np.float64)))


def match_ratio(matches: int, mismatches: int) -> float:
    """Aggregate an interpretability run: matches / (matches + mismatches)."""
    if matches < 0 or mismatches < 0 or matches + mismatches == 0:
        raise ValueError("need at least one judged text")
    return matches / (matches + mismatches)


def faithfulness(
    model: RnnModel,
    vocab: Vocabulary,
    texts: Sequence[LabeledText],
    attributor: Attributor,
    unit: str = "clause",
) -> EvalReport:
    """Mean drop of the predicted-class probability after deleting the
    top-attributed unit.  Texts with fewer than two units are skipped."""
    if unit == "clause":
        delimiters = CLAUSE_DELIMITERS
    elif unit == "sentence":
        delimiters = SENTENCE_DELIMITERS
    else:
        raise ValueError(f"unknown unit: {unit!r}")
    per_item: list[dict] = []
    skipped = 0
    for idx, text in enumerate(texts):
        units = split_on_delimiters(text.tokens, delimiters)
        if len(units) < 2:
            skipped += 1
            continue
        trace = forward(model, vocab.encode(text.tokens))
        cls = trace.predicted_class
        before = float(trace.probabilities[cls])
        scores = attributor(model, vocab, text.tokens, cls, units)
        top = units[int(np.argmax(scores))]
        kept = text.tokens[: top.q - 1] + text.tokens[top.r :]
        after = float(forward(model, vocab.encode(kept)).probabilities[cls])
        per_item.append(
            {
                "index": idx,
                "predicted_class": cls,
                "deleted": [top.q, top.r, " ".join(text.tokens[top.q - 1 : top.r])],
                "before": before,
                "after": after,
                "drop": before - after,
            }
        )
    if not per_item:
        raise ValueError("no text split into two or more units")
    return EvalReport(
        metric="faithfulness",
        method=getattr(attributor, "method", attributor.__class__.__name__),
        score=mean_probability_drop([item["drop"] for item in per_item]),
        per_item=per_item,
        skipped=skipped,
        clamp_count=getattr(attributor, "clamp_count", 0),
        extras={"unit": unit},
    )


def interpretability(
    model: RnnModel,
    vocab: Vocabulary,
    texts: Sequence[LabeledText],
    lexicons: SentimentLexicons,
    attributor: Attributor,
    positive_class: int = 1,
) -> EvalReport:
    """Fraction of texts whose positive-lexicon words out-score the
    negative-lexicon ones toward the positive class (strict inequality;
    multiple occurrences are averaged)."""
    per_item: list[dict] = []
    skipped = 0
    matches = 0
    for idx, text in enumerate(texts):
        lower = [t.lower() for t in text.tokens]
        pos_at = [i for i, t in enumerate(lower) if t in lexicons.positive]
        neg_at = [i for i, t in enumerate(lower) if t in lexicons.negative]
        if not pos_at or not neg_at:
            skipped += 1
            continue
        spans = tuple(Span(t, t) for t in range(1, len(text.tokens) + 1))
        scores = attributor(model, vocab, text.tokens, positive_class, spans)
        pos_mean = float(np.mean(scores[pos_at]))
        neg_mean = float(np.mean(scores[neg_at]))
        match = pos_mean > neg_mean
        matches += int(match)
        per_item.append(
            {
                "index": idx,
                "positive_mean": pos_mean,
                "negative_mean": neg_mean,
                "match": match,
            }
        )
    if not per_item:
        raise ValueError("no text carries both positive and negative lexicon words")
    return EvalReport(
        metric="interpretability",
        method=getattr(attributor, "method", attributor.__class__.__name__),
        score=match_ratio(matches, len(per_item) - matches),
        per_item=per_item,
        skipped=skipped,
        clamp_count=getattr(attributor, "clamp_count", 0),
    )


@dataclass
class TagStats:
    tag: str
    count: int
    mean: float
    median: float
    q1: float
    q3: float
    outliers: tuple[float, ...]


def pos_distribution(
    model: RnnModel,
    vocab: Vocabulary,
    texts: Sequence[LabeledText],
    attributor: Attributor | None = None,
) -> EvalReport:
    """Word-score statistics per coarse POS category, toward each text's
    predicted class; categories ranked by median, outliers beyond 1.5 IQR
    listed separately."""
    attributor = attributor or make_attributor("reat")
    pooled: dict[str, list[float]] = {}
    for text in texts:
        tags = tag(text.tokens, text.pos_tags)
        trace = forward(model, vocab.encode(text.tokens))
        cls = trace.predicted_class
        spans = tuple(Span(t, t) for t in range(1, len(text.tokens) + 1))
        scores = attributor(model, vocab, text.tokens, cls, spans)
        for t, score in zip(tags, scores):
            pooled.setdefault(t, []).append(float(score))
    stats = []
    for tag_name, values in pooled.items():
        # sorting first keeps every statistic invariant to input text order
        arr = np.sort(np.asarray(values))
        q1, median, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
        fence = 1.5 * (q3 - q1)
        outliers = tuple(float(v) for v in arr if v < q1 - fence or v > q3 + fence)
        stats.append(
            TagStats(
                tag=tag_name,
                count=arr.size,
                mean=float(np.mean(arr)),
                median=float(median),
                q1=float(q1),
                q3=float(q3),
                outliers=outliers,
            )
        )
    stats.sort(key=lambda s: s.median, reverse=True)
    per_item = [
        {
            "tag": s.tag,
            "count": s.count,
            "mean": s.mean,
            "median": s.median,
            "q1": s.q1,
            "q3": s.q3,
            "outliers": list(s.outliers),
        }
        for s in stats
    ]
    return EvalReport(
        metric="pos_distribution",
        method=getattr(attributor, "method", attributor.__class__.__name__),
        score=None,
        per_item=per_item,
        clamp_count=getattr(attributor, "clamp_count", 0),
        extras={"tags": stats},
    )


# ---------------------------------------------------------------------------
# adversarial swaps


@dataclass
class AttackOutcome:
    replacement: str
    in_vocabulary: bool
    predicted_class: int
    probability: float  # of the new predicted class
    flipped: bool
    scores_after: tuple[float, ...]  # swapped positions, original class


@dataclass
class AttackReport:
    word: str
    found: bool
    positions: tuple[int, ...]  # 1-based
    original_class: int = -1
    original_probability: float = 0.0
    scores_before: tuple[float, ...] = ()
    outcomes: list[AttackOutcome] = field(default_factory=list)

    def summary_table(self) -> str:
        if not self.found:
            return f'word "{self.word}" does not occur; nothing swapped'
        lines = [
            f'word "{self.word}" at positions {list(self.positions)}; '
            f"original class {self.original_class} "
            f"(p={self.original_probability:.4f}, scores={[f'{s:+.4f}' for s in self.scores_before]})"
        ]
        for out in self.outcomes:
            note = "" if out.in_vocabulary else " [UNK]"
            flag = "FLIPPED" if out.flipped else "kept"
            lines.append(
                f'  -> "{out.replacement}"{note}: class {out.predicted_class} '
                f"(p={out.probability:.4f}) {flag}, "
                f"scores={[f'{s:+.4f}' for s in out.scores_after]}"
            )
        return "\n".join(lines)


def adversarial_swap(
    model: RnnModel,
    vocab: Vocabulary,
    tokens: Sequence[str],
    word: str,
    replacements: Sequence[str],
) -> AttackReport:
    """Swap every occurrence of ``word`` for each replacement and report the
    prediction and the swapped positions' decomposition scores (before and
    after, both toward the original predicted class)."""
    positions = tuple(i + 1 for i, t in enumerate(tokens) if t == word)
    if not positions:
        return AttackReport(word=word, found=False, positions=())
    trace = forward(model, vocab.encode(tokens))
    cls = trace.predicted_class
    alpha = extract_alpha(trace)
    before = reat_word_scores(trace, alpha, cls)
    report = AttackReport(
        word=word,
        found=True,
        positions=positions,
        original_class=cls,
        original_probability=float(trace.probabilities[cls]),
        scores_before=tuple(float(before.scores[p - 1]) for p in positions),
    )
    for rep in replacements:
        swapped = [rep if t == word else t for t in tokens]
        new_trace = forward(model, vocab.encode(swapped))
        new_cls = new_trace.predicted_class
        after = reat_word_scores(new_trace, extract_alpha(new_trace), cls)
        report.outcomes.append(
            AttackOutcome(
                replacement=rep,
                in_vocabulary=rep in vocab,
                predicted_class=new_cls,
                probability=float(new_trace.probabilities[new_cls]),
                flipped=new_cls != cls,
                scores_after=tuple(float(after.scores[p - 1]) for p in positions),
            )
        )
    return report
