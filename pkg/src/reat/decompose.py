"""Additive attribution of a recurrent classifier's logit to input spans.

Every hidden-state sequence here is read through the update rule

    h_t = alpha_t * h_{t-1} + residual_t

where alpha_t is the per-dimension retention vector (the GRU update gate;
for LSTM the ratio f_t * o_t / o_{t-1}, with o_0 taken as all ones) and
residual_t := h_t - alpha_t * h_{t-1} is the evidence gained at step t.
Because the residual is defined as the exact remainder, the telescoping sum

    sum_t residual_t * prod_{k>t} alpha_k = h_T        (h_0 = 0)

holds identically, so span scores over any partition of the input add up to
the target logit z_c.  A span [q, r] scores

    W_c [ (h_r - prod_{j=q..r} alpha_j * h_{q-1}) * prod_{k>r} alpha_k ]

per direction; the bidirectional model scores the reverse direction with
mirrored span indices and sums the two dot products (the concatenated output
row supplies one weight block per direction).

Gradient and perturbation baselines (vanilla gradient, integrated gradient,
gradient times input, occlusion, omission) are word-level only and share the
same result container.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import SAFE_DIVIDE_EPS, safe_divide
from .rnn import (
    ForwardTrace,
    GruGates,
    LstmGates,
    RnnModel,
    forward,
    forward_embedded,
    grad_wrt_inputs,
)

__all__ = [
    "AlphaTrace",
    "AttributionResult",
    "BASELINE_METHODS",
    "DirectionAlphas",
    "Span",
    "attribution_record",
    "baseline_attribute",
    "extract_alpha",
    "naive_scores",
    "reat_partition_scores",
    "reat_phrase_score",
    "reat_word_scores",
]

BASELINE_METHODS = ("vanilla_grad", "integrated_grad", "grad_input", "occlusion", "omission")


@dataclass(frozen=True)
class Span:
    """1-based inclusive token span [q, r]."""

    q: int
    r: int

    def __post_init__(self):
        if not 1 <= self.q <= self.r:
            raise ValueError(f"invalid span [{self.q}, {self.r}]")

    @property
    def width(self) -> int:
        return self.r - self.q + 1


@dataclass
class DirectionAlphas:
    """Retention vectors for one direction, in processing order.

    ``suffix[i]`` pre-accumulates ``prod_{k>i} alpha_k`` (so ``suffix[T]`` is
    all ones); products over a span are recomputed by direct multiplication
    rather than by dividing suffix products.
    """

    alpha: np.ndarray  # (T, dh)
    residual: np.ndarray  # (T, dh)
    suffix: np.ndarray  # (T+1, dh)
    clamp_fired: bool = False


@dataclass
class AlphaTrace:
    directions: tuple[DirectionAlphas, ...]

    @property
    def clamp_fired(self) -> bool:
        return any(d.clamp_fired for d in self.directions)


@dataclass
class AttributionResult:
    """Span scores (logit units) for one text and one target class."""

    method: str
    target_class: int
    logit: float
    spans: tuple[Span, ...]
    scores: np.ndarray
    # per-direction score parts for bidirectional models, aligned with spans
    components: np.ndarray | None = None


def _suffix_products(alpha: np.ndarray) -> np.ndarray:
    n, dh = alpha.shape
    out = np.ones((n + 1, dh))
    for i in range(n - 1, -1, -1):
        out[i] = alpha[i] * out[i + 1]
    return out


def extract_alpha(trace: ForwardTrace) -> AlphaTrace:
    """Retention vectors, residuals, and suffix products for each direction."""
    dirs = []
    for d in trace.directions:
        if isinstance(d.gates, GruGates):
            alpha = d.gates.update.copy()
            clamped = False
        elif isinstance(d.gates, LstmGates):
            o = d.gates.output_gate
            o_prev = np.vstack([np.ones((1, o.shape[1])), o[:-1]])
            clamped = bool(np.any(np.abs(o_prev) < SAFE_DIVIDE_EPS))
            ratio = np.vstack([safe_divide(o[i], o_prev[i]) for i in range(o.shape[0])])
            alpha = d.gates.forget_gate * ratio
        else:
            raise TypeError(f"trace has no usable gates: {type(d.gates).__name__}")
        residual = d.hidden[1:] - alpha * d.hidden[:-1]
        dirs.append(
            DirectionAlphas(
                alpha=alpha,
                residual=residual,
                suffix=_suffix_products(alpha),
                clamp_fired=clamped,
            )
        )
    return AlphaTrace(directions=tuple(dirs))


def _w_blocks(trace: ForwardTrace, target_class: int) -> list[np.ndarray]:
    """The output-row block multiplying each direction's final state."""
    if not 0 <= target_class < trace.w_out.shape[0]:
        raise IndexError(f"target class {target_class} out of range")
    w_c = trace.w_out[target_class]
    dh = trace.directions[0].hidden.shape[1]
    return [w_c[i * dh : (i + 1) * dh] for i in range(len(trace.directions))]


def _mirror(span: Span, n: int) -> Span:
    return Span(n + 1 - span.r, n + 1 - span.q)


def _direction_word_scores(d, alphas: DirectionAlphas, w_block: np.ndarray) -> np.ndarray:
    return (alphas.residual * alphas.suffix[1:]) @ w_block


def _direction_span_score(
    d, alphas: DirectionAlphas, w_block: np.ndarray, span: Span
) -> float:
    span_prod = np.prod(alphas.alpha[span.q - 1 : span.r], axis=0)
    updating = d.hidden[span.r] - span_prod * d.hidden[span.q - 1]
    return float((updating * alphas.suffix[span.r]) @ w_block)


def _check_span(span: Span, n: int) -> None:
    if span.r > n:
        raise ValueError(f"span [{span.q}, {span.r}] exceeds sequence length {n}")


def reat_word_scores(trace: ForwardTrace, alpha: AlphaTrace, target_class: int) -> AttributionResult:
    """One additive score per token position toward ``target_class``."""
    n = trace.n_steps
    blocks = _w_blocks(trace, target_class)
    parts = []
    for d, da, w_block in zip(trace.directions, alpha.directions, blocks):
        scores = _direction_word_scores(d, da, w_block)
        parts.append(scores if len(parts) == 0 else scores[::-1])
    total = parts[0] if len(parts) == 1 else parts[0] + parts[1]
    return AttributionResult(
        method="reat",
        target_class=target_class,
        logit=float(trace.logits[target_class]),
        spans=tuple(Span(t, t) for t in range(1, n + 1)),
        scores=total,
        components=np.stack(parts, axis=1) if len(parts) == 2 else None,
    )


def reat_phrase_score(
    trace: ForwardTrace, alpha: AlphaTrace, span: Span, target_class: int
) -> float:
    """Additive score of one contiguous span toward ``target_class``."""
    n = trace.n_steps
    _check_span(span, n)
    blocks = _w_blocks(trace, target_class)
    total = 0.0
    for i, (d, da, w_block) in enumerate(zip(trace.directions, alpha.directions, blocks)):
        local = span if i == 0 else _mirror(span, n)
        total += _direction_span_score(d, da, w_block, local)
    return total


def reat_partition_scores(
    trace: ForwardTrace, alpha: AlphaTrace, spans: Sequence[Span], target_class: int
) -> AttributionResult:
    """Phrase scores for an ordered list of spans (typically a partition)."""
    scores = np.array([reat_phrase_score(trace, alpha, s, target_class) for s in spans])
    return AttributionResult(
        method="reat",
        target_class=target_class,
        logit=float(trace.logits[target_class]),
        spans=tuple(spans),
        scores=scores,
    )


def naive_scores(trace: ForwardTrace, target_class: int) -> AttributionResult:
    """Difference-of-hidden-states attribution: no retention discounting."""
    n = trace.n_steps
    blocks = _w_blocks(trace, target_class)
    parts = []
    for d, w_block in zip(trace.directions, blocks):
        scores = (d.hidden[1:] - d.hidden[:-1]) @ w_block
        parts.append(scores if len(parts) == 0 else scores[::-1])
    total = parts[0] if len(parts) == 1 else parts[0] + parts[1]
    return AttributionResult(
        method="naive",
        target_class=target_class,
        logit=float(trace.logits[target_class]),
        spans=tuple(Span(t, t) for t in range(1, n + 1)),
        scores=total,
        components=np.stack(parts, axis=1) if len(parts) == 2 else None,
    )


# ---------------------------------------------------------------------------
# baselines


def baseline_attribute(
    method: str,
    model: RnnModel,
    tokens: Sequence[int],
    target_class: int,
    steps: int = 50,
) -> AttributionResult:
    """Word-level baseline attributions.

    vanilla_grad     L2 norm of d z_c / d x_t (always >= 0)
    grad_input       dot(d z_c / d x_t, x_t) (signed)
    integrated_grad  midpoint Riemann sum of grad dot input along the
                     straight path from the zero-embedding baseline
    occlusion        z_c(full) - z_c(x_t zeroed)
    omission         z_c(full) - z_c(token t removed); needs T >= 2
    """
    trace = forward(model, tokens)
    if not 0 <= target_class < model.n_classes:
        raise IndexError(f"target class {target_class} out of range")
    n = trace.n_steps
    inputs = trace.inputs
    if method == "vanilla_grad":
        grads = grad_wrt_inputs(model, inputs, target_class)
        scores = np.sqrt(np.sum(grads * grads, axis=1))
    elif method == "grad_input":
        grads = grad_wrt_inputs(model, inputs, target_class)
        scores = np.sum(grads * inputs, axis=1)
    elif method == "integrated_grad":
        if steps < 1:
            raise ValueError(f"integrated_grad needs steps >= 1, got {steps}")
        total = np.zeros(n)
        for s in range(1, steps + 1):
            scaled = inputs * ((s - 0.5) / steps)
            grads = grad_wrt_inputs(model, scaled, target_class)
            total += np.sum(grads * inputs, axis=1)
        scores = total / steps
    elif method == "occlusion":
        base = float(trace.logits[target_class])
        scores = np.empty(n)
        for t in range(n):
            perturbed = inputs.copy()
            perturbed[t] = 0.0
            scores[t] = base - float(forward_embedded(model, perturbed).logits[target_class])
    elif method == "omission":
        if n < 2:
            raise ValueError("omission cannot remove the only token")
        base = float(trace.logits[target_class])
        scores = np.empty(n)
        for t in range(n):
            kept = np.delete(inputs, t, axis=0)
            scores[t] = base - float(forward_embedded(model, kept).logits[target_class])
    else:
        raise ValueError(f"unknown baseline method: {method!r}")
    return AttributionResult(
        method=method,
        target_class=target_class,
        logit=float(trace.logits[target_class]),
        spans=tuple(Span(t, t) for t in range(1, n + 1)),
        scores=scores,
    )


# ---------------------------------------------------------------------------
# serialisation


def attribution_record(
    result: AttributionResult, tokens: Sequence[str], level: str | None = None
) -> dict:
    """JSON-ready record; keys stay in the documented order
    (method, [level,] target_class, logit, spans[, components])."""
    record: dict = {"method": result.method}
    if level is not None:
        record["level"] = level
    record["target_class"] = result.target_class
    record["logit"] = result.logit
    record["spans"] = [
        [s.q, s.r, " ".join(tokens[s.q - 1 : s.r]), float(score)]
        for s, score in zip(result.spans, result.scores)
    ]
    if result.components is not None:
        record["components"] = [[float(a), float(b)] for a, b in result.components]
    return record
