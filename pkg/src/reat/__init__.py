"""Additive attribution for small recurrent text classifiers.

Train a GRU, LSTM, or bidirectional GRU sentiment classifier, decompose any
prediction into exact additive word/phrase/clause contributions, compare
against gradient and perturbation baselines, and evaluate the attributions
with faithfulness, interpretability, POS-distribution, and synonym-swap
harnesses.
"""

from .chunking import (
    COARSE_TAGS,
    HierarchicalAttribution,
    Phrase,
    PhrasePartition,
    chunk,
    clauses,
    hierarchy,
    normalize_tag,
    tag,
)
from .decompose import (
    AlphaTrace,
    AttributionResult,
    Span,
    attribution_record,
    baseline_attribute,
    extract_alpha,
    naive_scores,
    reat_partition_scores,
    reat_phrase_score,
    reat_word_scores,
)
from .evaluate import (
    AttackReport,
    EvalReport,
    SentimentLexicons,
    adversarial_swap,
    faithfulness,
    interpretability,
    make_attributor,
    pos_distribution,
)
from .heatmap import render_heatmap
from .numerics import DimensionError, make_rng, softmax
from .rnn import (
    ForwardTrace,
    RnnModel,
    TrainConfig,
    TrainResult,
    evaluate_accuracy,
    forward,
    forward_embedded,
    grad_wrt_embeddings,
    gru_step,
    lstm_step,
    random_model,
    train,
)
from .store import (
    LabeledText,
    Vocabulary,
    encode_dataset,
    generate_toy_corpus,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)

__version__ = "0.1.0"
