"""Recurrent cells with gate-recording forward passes, exact gradients, and
a small sequence-at-a-time trainer.

Update rules implemented here (per direction, h_0 = 0 and c_0 = 0):

GRU::

    r_t = sigmoid(W_rx x_t + W_rh h_{t-1} + b_r)
    u_t = sigmoid(W_ux x_t + W_uh h_{t-1} + b_u)
    g_t = tanh(W_gx x_t + r_t * (W_gh h_{t-1}) + b_g)
    h_t = u_t * h_{t-1} + (1 - u_t) * g_t

LSTM::

    i_t, f_t, o_t = sigmoid(W_.x x_t + W_.h h_{t-1} + b_.)
    g_t = tanh(W_gx x_t + W_gh h_{t-1} + b_g)
    c_t = f_t * c_{t-1} + i_t * g_t
    h_t = o_t * tanh(c_t)

A bidirectional GRU ("bigru") runs one cell over x_1..x_T and an independent
cell over x_T..x_1; the classifier reads the concatenation of the two final
states.  Logits are z = W h_final (no output bias), probabilities softmax(z).

Gradients are reverse-mode through the full unrolled sequence, so they are
exact up to floating-point rounding; the trainer does cross-entropy descent
with Adam, one sequence per step, with global gradient-norm clipping.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, fields
from typing import Iterator, Sequence

import numpy as np

from .numerics import DimensionError, make_rng, sigmoid, softmax

__all__ = [
    "ARCHITECTURES",
    "DirectionTrace",
    "EpochMetrics",
    "ForwardTrace",
    "Gradients",
    "GruGates",
    "GruParams",
    "LstmGates",
    "LstmParams",
    "RnnModel",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "evaluate_accuracy",
    "forward",
    "forward_embedded",
    "grad_wrt_embeddings",
    "grad_wrt_inputs",
    "gru_step",
    "lstm_step",
    "random_model",
    "train",
]

ARCHITECTURES = ("gru", "lstm", "bigru")


class TrainingError(RuntimeError):
    """Raised when optimisation cannot proceed (e.g. non-finite loss)."""


# ---------------------------------------------------------------------------
# parameters


@dataclass
class GruParams:
    w_rx: np.ndarray
    w_rh: np.ndarray
    b_r: np.ndarray
    w_ux: np.ndarray
    w_uh: np.ndarray
    b_u: np.ndarray
    w_gx: np.ndarray
    w_gh: np.ndarray
    b_g: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.w_ux.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_ux.shape[1]


@dataclass
class LstmParams:
    w_ix: np.ndarray
    w_ih: np.ndarray
    b_i: np.ndarray
    w_fx: np.ndarray
    w_fh: np.ndarray
    b_f: np.ndarray
    w_ox: np.ndarray
    w_oh: np.ndarray
    b_o: np.ndarray
    w_gx: np.ndarray
    w_gh: np.ndarray
    b_g: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.w_ix.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_ix.shape[1]


def _param_fields(params) -> Iterator[tuple[str, np.ndarray]]:
    for f in fields(params):
        yield f.name, getattr(params, f.name)


@dataclass
class RnnModel:
    """A trained (or freshly initialised) classifier.

    ``cells`` holds one parameter set for gru/lstm and two for bigru
    (normal-order first, reverse-order second).  Immutable by convention:
    nothing in this package mutates a model after construction except the
    trainer, which works on its own copy.
    """

    architecture: str
    embedding: np.ndarray  # (vocab_size, embed_dim)
    cells: tuple
    w_out: np.ndarray  # (n_classes, hidden_dim) or (n_classes, 2 * hidden_dim)

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.embedding.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.cells[0].hidden_dim

    @property
    def n_classes(self) -> int:
        return self.w_out.shape[0]

    def validate(self) -> None:
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture: {self.architecture!r}")
        expected_cells = 2 if self.architecture == "bigru" else 1
        if len(self.cells) != expected_cells:
            raise DimensionError(
                f"{self.architecture} needs {expected_cells} cell(s), got {len(self.cells)}"
            )
        cell_type = LstmParams if self.architecture == "lstm" else GruParams
        dh = self.hidden_dim
        for cell in self.cells:
            if not isinstance(cell, cell_type):
                raise DimensionError(f"{self.architecture} cell must be {cell_type.__name__}")
            for name, arr in _param_fields(cell):
                want = (
                    (dh,)
                    if name.startswith("b_")
                    else (dh, self.embed_dim)
                    if name.endswith("x")
                    else (dh, dh)
                )
                if arr.shape != want:
                    raise DimensionError(f"cell param {name} has shape {arr.shape}, want {want}")
        final_dim = 2 * dh if self.architecture == "bigru" else dh
        if self.w_out.ndim != 2 or self.w_out.shape[1] != final_dim:
            raise DimensionError(
                f"w_out shape {self.w_out.shape} incompatible with final hidden dim {final_dim}"
            )

    def param_items(self) -> Iterator[tuple[str, np.ndarray]]:
        """All parameter arrays with stable names, in serialisation order."""
        yield "embedding", self.embedding
        for i, cell in enumerate(self.cells):
            for name, arr in _param_fields(cell):
                yield f"cell{i}.{name}", arr
        yield "w_out", self.w_out

    def copy(self) -> "RnnModel":
        return copy.deepcopy(self)


def random_model(
    architecture: str,
    vocab_size: int,
    embed_dim: int,
    hidden_dim: int,
    n_classes: int,
    rng: np.random.Generator,
    scale: float = 0.08,
) -> RnnModel:
    """Fresh model with all weights uniform on (-scale, scale)."""
    if architecture not in ARCHITECTURES:
        raise ValueError(f"unknown architecture: {architecture!r}")

    def mat(rows, cols):
        return rng.uniform(-scale, scale, size=(rows, cols))

    def vec(n):
        return rng.uniform(-scale, scale, size=n)

    def gru_cell():
        return GruParams(
            w_rx=mat(hidden_dim, embed_dim), w_rh=mat(hidden_dim, hidden_dim), b_r=vec(hidden_dim),
            w_ux=mat(hidden_dim, embed_dim), w_uh=mat(hidden_dim, hidden_dim), b_u=vec(hidden_dim),
            w_gx=mat(hidden_dim, embed_dim), w_gh=mat(hidden_dim, hidden_dim), b_g=vec(hidden_dim),
        )

    def lstm_cell():
        return LstmParams(
            w_ix=mat(hidden_dim, embed_dim), w_ih=mat(hidden_dim, hidden_dim), b_i=vec(hidden_dim),
            w_fx=mat(hidden_dim, embed_dim), w_fh=mat(hidden_dim, hidden_dim), b_f=vec(hidden_dim),
            w_ox=mat(hidden_dim, embed_dim), w_oh=mat(hidden_dim, hidden_dim), b_o=vec(hidden_dim),
            w_gx=mat(hidden_dim, embed_dim), w_gh=mat(hidden_dim, hidden_dim), b_g=vec(hidden_dim),
        )

    if architecture == "gru":
        cells = (gru_cell(),)
    elif architecture == "lstm":
        cells = (lstm_cell(),)
    else:
        cells = (gru_cell(), gru_cell())
    final_dim = 2 * hidden_dim if architecture == "bigru" else hidden_dim
    model = RnnModel(
        architecture=architecture,
        embedding=rng.uniform(-scale, scale, size=(vocab_size, embed_dim)),
        cells=cells,
        w_out=mat(n_classes, final_dim),
    )
    model.validate()
    return model


# ---------------------------------------------------------------------------
# forward passes


@dataclass
class GruGates:
    """Per-step gate activations; arrays are (dh,) for a single step or
    (T, dh) when stacked inside a trace."""

    reset: np.ndarray
    update: np.ndarray
    candidate: np.ndarray


@dataclass
class LstmGates:
    input_gate: np.ndarray
    forget_gate: np.ndarray
    output_gate: np.ndarray
    candidate: np.ndarray


@dataclass
class DirectionTrace:
    """States of one direction, in that direction's own processing order.

    ``hidden[0]`` is the zero boundary state, ``hidden[i]`` the state after
    the direction's i-th step.  For the reverse direction of a bigru, step i
    consumes token position T+1-i, so its final row summarises the whole
    text read backwards.
    """

    hidden: np.ndarray  # (T+1, dh)
    gates: GruGates | LstmGates
    cell: np.ndarray | None = None  # (T+1, dh) for LSTM, cell[0] = 0

    @property
    def n_steps(self) -> int:
        return self.hidden.shape[0] - 1


@dataclass
class ForwardTrace:
    tokens: tuple[int, ...] | None
    inputs: np.ndarray  # (T, embed_dim) as fed to the cells
    directions: tuple[DirectionTrace, ...]
    w_out: np.ndarray
    logits: np.ndarray
    probabilities: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.inputs.shape[0]

    @property
    def final_hidden(self) -> np.ndarray:
        if len(self.directions) == 1:
            return self.directions[0].hidden[-1]
        return np.concatenate([d.hidden[-1] for d in self.directions])

    @property
    def predicted_class(self) -> int:
        return int(np.argmax(self.probabilities))


def gru_step(cell: GruParams, h_prev: np.ndarray, x_t: np.ndarray) -> tuple[np.ndarray, GruGates]:
    r = sigmoid(cell.w_rx @ x_t + cell.w_rh @ h_prev + cell.b_r)
    u = sigmoid(cell.w_ux @ x_t + cell.w_uh @ h_prev + cell.b_u)
    g = np.tanh(cell.w_gx @ x_t + r * (cell.w_gh @ h_prev) + cell.b_g)
    h = u * h_prev + (1.0 - u) * g
    return h, GruGates(reset=r, update=u, candidate=g)


def lstm_step(
    cell: LstmParams, h_prev: np.ndarray, c_prev: np.ndarray, x_t: np.ndarray
) -> tuple[np.ndarray, np.ndarray, LstmGates]:
    i = sigmoid(cell.w_ix @ x_t + cell.w_ih @ h_prev + cell.b_i)
    f = sigmoid(cell.w_fx @ x_t + cell.w_fh @ h_prev + cell.b_f)
    o = sigmoid(cell.w_ox @ x_t + cell.w_oh @ h_prev + cell.b_o)
    g = np.tanh(cell.w_gx @ x_t + cell.w_gh @ h_prev + cell.b_g)
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, LstmGates(input_gate=i, forget_gate=f, output_gate=o, candidate=g)


def _run_gru(cell: GruParams, inputs: np.ndarray) -> DirectionTrace:
    n, dh = inputs.shape[0], cell.hidden_dim
    hidden = np.zeros((n + 1, dh))
    reset = np.empty((n, dh))
    update = np.empty((n, dh))
    cand = np.empty((n, dh))
    for i in range(n):
        h, gates = gru_step(cell, hidden[i], inputs[i])
        hidden[i + 1] = h
        reset[i], update[i], cand[i] = gates.reset, gates.update, gates.candidate
    return DirectionTrace(hidden=hidden, gates=GruGates(reset, update, cand))


def _run_lstm(cell: LstmParams, inputs: np.ndarray) -> DirectionTrace:
    n, dh = inputs.shape[0], cell.hidden_dim
    hidden = np.zeros((n + 1, dh))
    cstate = np.zeros((n + 1, dh))
    gi = np.empty((n, dh))
    gf = np.empty((n, dh))
    go = np.empty((n, dh))
    gc = np.empty((n, dh))
    for i in range(n):
        h, c, gates = lstm_step(cell, hidden[i], cstate[i], inputs[i])
        hidden[i + 1], cstate[i + 1] = h, c
        gi[i], gf[i], go[i], gc[i] = (
            gates.input_gate, gates.forget_gate, gates.output_gate, gates.candidate,
        )
    return DirectionTrace(hidden=hidden, gates=LstmGates(gi, gf, go, gc), cell=cstate)


def forward_embedded(
    model: RnnModel, inputs: np.ndarray, tokens: Sequence[int] | None = None
) -> ForwardTrace:
    """Run the classifier on already-embedded inputs of shape (T, embed_dim)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[0] < 1:
        raise DimensionError(f"inputs must be (T>=1, d), got shape {inputs.shape}")
    if inputs.shape[1] != model.embed_dim:
        raise DimensionError(
            f"inputs have dim {inputs.shape[1]}, model expects {model.embed_dim}"
        )
    if model.architecture == "lstm":
        directions = (_run_lstm(model.cells[0], inputs),)
    elif model.architecture == "gru":
        directions = (_run_gru(model.cells[0], inputs),)
    else:
        directions = (
            _run_gru(model.cells[0], inputs),
            _run_gru(model.cells[1], inputs[::-1]),
        )
    final = (
        directions[0].hidden[-1]
        if len(directions) == 1
        else np.concatenate([d.hidden[-1] for d in directions])
    )
    logits = model.w_out @ final
    return ForwardTrace(
        tokens=tuple(int(t) for t in tokens) if tokens is not None else None,
        inputs=inputs,
        directions=directions,
        w_out=model.w_out,
        logits=logits,
        probabilities=softmax(logits),
    )


def forward(model: RnnModel, tokens: Sequence[int]) -> ForwardTrace:
    """Embed a token-index sequence and run the full recorded forward pass."""
    ids = np.asarray(tokens, dtype=np.int64)
    if ids.ndim != 1 or ids.size < 1:
        raise DimensionError("token sequence must be non-empty and 1-D")
    if np.any(ids < 0) or np.any(ids >= model.vocab_size):
        bad = ids[(ids < 0) | (ids >= model.vocab_size)][0]
        raise IndexError(f"token index {bad} outside vocabulary of size {model.vocab_size}")
    return forward_embedded(model, model.embedding[ids], tokens=ids)


# ---------------------------------------------------------------------------
# reverse-mode gradients


@dataclass
class Gradients:
    """Gradients of a scalar (loss or single logit) w.r.t. everything."""

    inputs: np.ndarray  # (T, embed_dim), one row per token position
    cells: tuple
    w_out: np.ndarray
    embedding: np.ndarray | None = None  # (vocab, embed_dim), rows accumulated

    def param_items(self) -> Iterator[tuple[str, np.ndarray]]:
        if self.embedding is not None:
            yield "embedding", self.embedding
        for i, cell in enumerate(self.cells):
            for name, arr in _param_fields(cell):
                yield f"cell{i}.{name}", arr
        yield "w_out", self.w_out


def _zeros_like_params(params):
    kwargs = {name: np.zeros_like(arr) for name, arr in _param_fields(params)}
    return type(params)(**kwargs)


def _gru_backward(
    cell: GruParams, trace: DirectionTrace, inputs: np.ndarray, dh_last: np.ndarray
) -> tuple[GruParams, np.ndarray]:
    grads = _zeros_like_params(cell)
    n = trace.n_steps
    d_inputs = np.zeros_like(inputs)
    dh = dh_last.copy()
    g = trace.gates
    for i in range(n - 1, -1, -1):
        h_prev = trace.hidden[i]
        x = inputs[i]
        r, u, cand = g.reset[i], g.update[i], g.candidate[i]
        m = cell.w_gh @ h_prev  # recomputed pre-reset recurrent term
        du = dh * (h_prev - cand)
        dcand = dh * (1.0 - u)
        da_g = dcand * (1.0 - cand * cand)
        da_u = du * u * (1.0 - u)
        dr = da_g * m
        da_r = dr * r * (1.0 - r)
        grads.w_gx += np.outer(da_g, x)
        grads.w_gh += np.outer(da_g * r, h_prev)
        grads.b_g += da_g
        grads.w_ux += np.outer(da_u, x)
        grads.w_uh += np.outer(da_u, h_prev)
        grads.b_u += da_u
        grads.w_rx += np.outer(da_r, x)
        grads.w_rh += np.outer(da_r, h_prev)
        grads.b_r += da_r
        d_inputs[i] = cell.w_rx.T @ da_r + cell.w_ux.T @ da_u + cell.w_gx.T @ da_g
        dh = dh * u + cell.w_rh.T @ da_r + cell.w_uh.T @ da_u + cell.w_gh.T @ (da_g * r)
    return grads, d_inputs


def _lstm_backward(
    cell: LstmParams, trace: DirectionTrace, inputs: np.ndarray, dh_last: np.ndarray
) -> tuple[LstmParams, np.ndarray]:
    grads = _zeros_like_params(cell)
    n = trace.n_steps
    d_inputs = np.zeros_like(inputs)
    dh = dh_last.copy()
    dc = np.zeros(cell.hidden_dim)
    g = trace.gates
    for idx in range(n - 1, -1, -1):
        h_prev = trace.hidden[idx]
        c_prev = trace.cell[idx]
        c_t = trace.cell[idx + 1]
        x = inputs[idx]
        i_g, f_g, o_g, cand = (
            g.input_gate[idx], g.forget_gate[idx], g.output_gate[idx], g.candidate[idx],
        )
        tc = np.tanh(c_t)
        do = dh * tc
        dc = dc + dh * o_g * (1.0 - tc * tc)
        di = dc * cand
        df = dc * c_prev
        dcand = dc * i_g
        da_i = di * i_g * (1.0 - i_g)
        da_f = df * f_g * (1.0 - f_g)
        da_o = do * o_g * (1.0 - o_g)
        da_g = dcand * (1.0 - cand * cand)
        grads.w_ix += np.outer(da_i, x)
        grads.w_ih += np.outer(da_i, h_prev)
        grads.b_i += da_i
        grads.w_fx += np.outer(da_f, x)
        grads.w_fh += np.outer(da_f, h_prev)
        grads.b_f += da_f
        grads.w_ox += np.outer(da_o, x)
        grads.w_oh += np.outer(da_o, h_prev)
        grads.b_o += da_o
        grads.w_gx += np.outer(da_g, x)
        grads.w_gh += np.outer(da_g, h_prev)
        grads.b_g += da_g
        d_inputs[idx] = (
            cell.w_ix.T @ da_i + cell.w_fx.T @ da_f + cell.w_ox.T @ da_o + cell.w_gx.T @ da_g
        )
        dh = (
            cell.w_ih.T @ da_i + cell.w_fh.T @ da_f + cell.w_oh.T @ da_o + cell.w_gh.T @ da_g
        )
        dc = dc * f_g
    return grads, d_inputs


def backward_from_logits(model: RnnModel, trace: ForwardTrace, dz: np.ndarray) -> Gradients:
    """Back-propagate a gradient at the logits through the whole network."""
    dz = np.asarray(dz, dtype=np.float64)
    final = trace.final_hidden
    d_w_out = np.outer(dz, final)
    dh_final = model.w_out.T @ dz
    hidden_dim = model.hidden_dim
    if model.architecture == "bigru":
        parts = (dh_final[:hidden_dim], dh_final[hidden_dim:])
        grads_n, dx_n = _gru_backward(model.cells[0], trace.directions[0], trace.inputs, parts[0])
        rev_inputs = trace.inputs[::-1]
        grads_r, dx_r = _gru_backward(model.cells[1], trace.directions[1], rev_inputs, parts[1])
        cell_grads = [grads_n, grads_r]
        d_inputs = dx_n + dx_r[::-1]
    elif model.architecture == "lstm":
        grads, d_inputs = _lstm_backward(model.cells[0], trace.directions[0], trace.inputs, dh_final)
        cell_grads = [grads]
    else:
        grads, d_inputs = _gru_backward(model.cells[0], trace.directions[0], trace.inputs, dh_final)
        cell_grads = [grads]
    emb_grad = None
    if trace.tokens is not None:
        emb_grad = np.zeros_like(model.embedding)
        np.add.at(emb_grad, np.asarray(trace.tokens, dtype=np.int64), d_inputs)
    return Gradients(inputs=d_inputs, cells=tuple(cell_grads), w_out=d_w_out, embedding=emb_grad)


def grad_wrt_inputs(model: RnnModel, inputs: np.ndarray, target_class: int) -> np.ndarray:
    """d logit[target_class] / d inputs for an embedded (T, d) sequence."""
    trace = forward_embedded(model, inputs)
    if not 0 <= target_class < model.n_classes:
        raise IndexError(f"target class {target_class} out of range")
    dz = np.zeros(model.n_classes)
    dz[target_class] = 1.0
    return backward_from_logits(model, trace, dz).inputs


def grad_wrt_embeddings(model: RnnModel, tokens: Sequence[int], target_class: int) -> np.ndarray:
    """Exact gradient of the target logit w.r.t. each input embedding vector.

    Returns a (T, embed_dim) matrix; positions are independent, so a token
    appearing twice gets two independent rows.
    """
    ids = np.asarray(tokens, dtype=np.int64)
    if ids.ndim != 1 or ids.size < 1:
        raise DimensionError("token sequence must be non-empty and 1-D")
    if np.any(ids < 0) or np.any(ids >= model.vocab_size):
        raise IndexError("token index outside vocabulary")
    return grad_wrt_inputs(model, model.embedding[ids], target_class)


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 20
    seed: int = 0
    clip: float = 5.0
    freeze_embeddings: bool = False
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8


@dataclass
class EpochMetrics:
    epoch: int
    mean_loss: float
    train_accuracy: float
    dev_accuracy: float | None


@dataclass
class TrainResult:
    model: RnnModel
    metrics: list[EpochMetrics] = field(default_factory=list)
    best_epoch: int = 0


class _Adam:
    def __init__(self, config: TrainConfig):
        self.lr = config.learning_rate
        self.b1 = config.adam_beta1
        self.b2 = config.adam_beta2
        self.eps = config.adam_eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for name, p in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            self.m[name] = self.b1 * self.m[name] + (1.0 - self.b1) * g
            self.v[name] = self.b2 * self.v[name] + (1.0 - self.b2) * g * g
            m_hat = self.m[name] / c1
            v_hat = self.v[name] / c2
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _clip_global_norm(grads: dict[str, np.ndarray], clip: float) -> None:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if clip > 0.0 and total > clip:
        scale = clip / total
        for g in grads.values():
            g *= scale


def _cross_entropy(logits: np.ndarray, label: int) -> float:
    shifted = logits - np.max(logits)
    return float(np.log(np.sum(np.exp(shifted))) - shifted[label])


def evaluate_accuracy(model: RnnModel, data: Sequence[tuple[Sequence[int], int]]) -> float:
    if not data:
        raise ValueError("empty dataset")
    hits = sum(1 for tokens, label in data if forward(model, tokens).predicted_class == label)
    return hits / len(data)


def train(
    model: RnnModel,
    train_data: Sequence[tuple[Sequence[int], int]],
    config: TrainConfig | None = None,
    dev_data: Sequence[tuple[Sequence[int], int]] | None = None,
) -> TrainResult:
    """Sequence-at-a-time cross-entropy training with Adam.

    The input model is never touched; the returned model is the epoch
    snapshot with the best development accuracy (training accuracy when no
    dev set is given).  ``epochs=0`` hands back an untouched copy.
    """
    config = config or TrainConfig()
    if not train_data:
        raise TrainingError("empty training dataset")
    n_classes = model.n_classes
    for i, (tokens, label) in enumerate(train_data):
        if not 0 <= label < n_classes:
            raise TrainingError(f"sample {i}: label {label} outside {n_classes} classes")
    work = model.copy()
    if config.epochs == 0:
        return TrainResult(model=work, metrics=[], best_epoch=0)

    rng = make_rng(config.seed)
    adam = _Adam(config)
    best_model = work.copy()
    best_score = -1.0
    best_epoch = 0
    metrics: list[EpochMetrics] = []

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_data))
        losses = 0.0
        hits = 0
        for j in order:
            tokens, label = train_data[j]
            trace = forward(work, tokens)
            loss = _cross_entropy(trace.logits, label)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch}, sample {j} "
                    f"(logits={trace.logits!r})"
                )
            losses += loss
            if trace.predicted_class == label:
                hits += 1
            dz = trace.probabilities.copy()
            dz[label] -= 1.0
            grads = backward_from_logits(work, trace, dz)
            grad_map = dict(grads.param_items())
            if config.freeze_embeddings:
                grad_map.pop("embedding", None)
            _clip_global_norm(grad_map, config.clip)
            params = dict(work.param_items())
            adam.step({k: params[k] for k in grad_map}, grad_map)
        mean_loss = losses / len(train_data)
        train_acc = hits / len(train_data)
        dev_acc = evaluate_accuracy(work, dev_data) if dev_data else None
        metrics.append(EpochMetrics(epoch, mean_loss, train_acc, dev_acc))
        score = dev_acc if dev_acc is not None else train_acc
        if score > best_score:
            best_score = score
            best_model = work.copy()
            best_epoch = epoch
    return TrainResult(model=best_model, metrics=metrics, best_epoch=best_epoch)
