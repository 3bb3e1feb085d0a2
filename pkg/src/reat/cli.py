"""Command-line front end.

Subcommands: train, attribute, chunk, eval-faithfulness,
eval-interpretability, eval-pos, attack, gen-toy.  Exit codes: 0 success,
1 usage error, 2 data error (unreadable/corrupt/malformed inputs).

Attribution output is line-oriented JSON, one object per text with keys in
the order (method, [level,] target_class, logit, spans); each span entry is
[q, r, "surface text", score].  Bidirectional word-level records add a
"components" list with the per-direction score parts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import chunking, decompose, evaluate, store
from .heatmap import render_heatmap
from .numerics import make_rng
from .rnn import TrainConfig, forward, random_model, train
from .store import DatasetError, ModelFileError

__all__ = ["cli_main", "main"]

_METHODS = ("reat", "naive", "vanilla-grad", "integrated-grad", "grad-input",
            "occlusion", "omission")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="reat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-toy", parser_class=_Parser,
                       help="write a deterministic toy sentiment corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=400)

    p = sub.add_parser("train", parser_class=_Parser, help="train a classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--arch", choices=("gru", "lstm", "bigru"), default="gru")
    p.add_argument("--dev")
    p.add_argument("--embed-dim", type=int, default=16)
    p.add_argument("--hidden-dim", type=int, default=32)
    p.add_argument("--classes", type=int, help="class count (default: max label + 1)")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clip", type=float, default=5.0)
    p.add_argument("--freeze-embeddings", action="store_true")
    p.add_argument("--embeddings", help="optional token-vector text file")
    p.add_argument("--max-len", type=int, help="drop training texts longer than this")

    p = sub.add_parser("attribute", parser_class=_Parser,
                       help="decompose predictions into span scores")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text", help="whitespace-tokenised input text")
    src.add_argument("--input", help="TSV dataset to attribute line by line")
    p.add_argument("--tags", help="space-separated POS tags for --text")
    p.add_argument("--method", choices=_METHODS, default="reat")
    p.add_argument("--level", choices=("word", "phrase", "clause", "hierarchy"),
                   default="word")
    p.add_argument("--class", dest="target_class", default="predicted",
                   help='class index or "predicted"')
    p.add_argument("--steps", type=int, default=50, help="integrated-grad steps")
    p.add_argument("--out", help="write records here instead of stdout")
    p.add_argument("--html", help="write a heatmap (single text only)")

    p = sub.add_parser("chunk", parser_class=_Parser,
                       help="show phrase partitions for texts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text")
    src.add_argument("--input")
    p.add_argument("--tags")

    p = sub.add_parser("eval-faithfulness", parser_class=_Parser,
                       help="probability drop from deleting the top unit")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=_METHODS + ("random", "constant"), default="reat")
    p.add_argument("--unit", choices=("clause", "sentence"), default="clause")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--records", help="write per-text records here")

    p = sub.add_parser("eval-interpretability", parser_class=_Parser,
                       help="lexicon agreement of word attributions")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--pos-lexicon", required=True)
    p.add_argument("--neg-lexicon", required=True)
    p.add_argument("--method", choices=_METHODS, default="reat")
    p.add_argument("--positive-class", type=int, default=1)
    p.add_argument("--records")

    p = sub.add_parser("eval-pos", parser_class=_Parser,
                       help="score distribution per POS category")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=_METHODS, default="reat")
    p.add_argument("--records")

    p = sub.add_parser("attack", parser_class=_Parser,
                       help="swap a word for replacements and watch the prediction")
    p.add_argument("--model", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--replacements", required=True, help="comma-separated words")
    return parser


def _load_model(path):
    return store.load_model(path)


def _parse_class(value: str, n_classes: int):
    if value == "predicted":
        return "predicted"
    try:
        cls = int(value)
    except ValueError:
        raise UsageError(f'--class must be an integer or "predicted", got {value!r}')
    if not 0 <= cls < n_classes:
        raise DatasetError(f"class {cls} out of range for {n_classes}-class model")
    return cls


def _texts_from_args(args) -> list[store.LabeledText]:
    if args.text is not None:
        tokens = tuple(args.text.split())
        if not tokens:
            raise DatasetError("--text is empty")
        tags = None
        if getattr(args, "tags", None):
            raw = tuple(args.tags.split())
            if len(raw) != len(tokens):
                raise DatasetError(f"{len(raw)} tags for {len(tokens)} tokens")
            tags = tuple(chunking.normalize_tag(t) for t in raw)
        return [store.LabeledText(label=0, tokens=tokens, pos_tags=tags)]
    return store.load_dataset(args.input)


def _cmd_gen_toy(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_set, test_set = store.generate_toy_corpus(args.seed, args.n_train, args.n_test)
    store.save_dataset(out_dir / "train.tsv", train_set)
    store.save_dataset(out_dir / "test.tsv", test_set)
    (out_dir / "positive-words.txt").write_text(
        "\n".join(sorted(store.TOY_POSITIVE_WORDS)) + "\n", encoding="utf-8"
    )
    (out_dir / "negative-words.txt").write_text(
        "\n".join(sorted(store.TOY_NEGATIVE_WORDS)) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(train_set)} train / {len(test_set)} test texts to {out_dir}")
    return 0


def _cmd_train(args) -> int:
    texts = store.load_dataset(args.data, max_len=args.max_len)
    if not texts:
        raise DatasetError(f"{args.data}: no usable texts")
    vocab = store.Vocabulary.build(texts)
    n_classes = args.classes or max(t.label for t in texts) + 1
    rng = make_rng(args.seed)
    model = random_model(args.arch, len(vocab), args.embed_dim, args.hidden_dim,
                         n_classes, rng)
    if args.embeddings:
        model.embedding = store.load_text_embeddings(
            args.embeddings, vocab, args.embed_dim, rng
        )
    dev = store.encode_dataset(vocab, store.load_dataset(args.dev)) if args.dev else None
    config = TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
                         clip=args.clip, freeze_embeddings=args.freeze_embeddings)
    result = train(model, store.encode_dataset(vocab, texts), config, dev_data=dev)
    for m in result.metrics:
        dev_part = f" dev_acc={m.dev_accuracy:.4f}" if m.dev_accuracy is not None else ""
        print(f"epoch {m.epoch:>3} loss={m.mean_loss:.4f} train_acc={m.train_accuracy:.4f}"
              f"{dev_part}")
    store.save_model(result.model, vocab, args.out)
    print(f"saved best epoch {result.best_epoch} to {args.out}")
    return 0


def _span_result(method, level, model, vocab, text, cls, steps):
    """AttributionResult for one text at one granularity."""
    ids = vocab.encode(text.tokens)
    trace = forward(model, ids)
    target = trace.predicted_class if cls == "predicted" else cls
    n = len(text.tokens)
    if level == "word":
        spans = tuple(decompose.Span(t, t) for t in range(1, n + 1))
    elif level == "phrase":
        spans = chunking.chunk(chunking.tag(text.tokens, text.pos_tags)).spans
    else:
        spans = chunking.clauses(text.tokens)
    if method == "reat":
        alpha = decompose.extract_alpha(trace)
        if level == "word":
            return decompose.reat_word_scores(trace, alpha, target)
        return decompose.reat_partition_scores(trace, alpha, spans, target)
    if method == "naive":
        word = decompose.naive_scores(trace, target)
    else:
        word = decompose.baseline_attribute(method.replace("-", "_"), model, ids,
                                            target, steps=steps)
    if level == "word":
        return word
    scores = np.array([float(np.sum(word.scores[s.q - 1 : s.r])) for s in spans])
    return decompose.AttributionResult(
        method=word.method, target_class=target, logit=word.logit,
        spans=spans, scores=scores,
    )


def _cmd_attribute(args) -> int:
    model, vocab = _load_model(args.model)
    texts = _texts_from_args(args)
    cls = _parse_class(args.target_class, model.n_classes)
    if args.html and len(texts) != 1:
        raise UsageError("--html needs exactly one input text")
    lines = []
    html_payload = None
    for text in texts:
        if args.level == "hierarchy":
            if args.method != "reat":
                raise UsageError("--level hierarchy is only defined for --method reat")
            h = chunking.hierarchy(model, vocab, text.tokens, text.pos_tags, cls)
            for name, result in h.levels():
                lines.append(json.dumps(
                    decompose.attribution_record(result, text.tokens, level=name)))
            html_payload = h
        else:
            result = _span_result(args.method, args.level, model, vocab, text, cls,
                                  args.steps)
            lines.append(json.dumps(decompose.attribution_record(result, text.tokens)))
            html_payload = (result, text.tokens)
    payload = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    if args.html:
        if isinstance(html_payload, chunking.HierarchicalAttribution):
            data = render_heatmap(html_payload)
        else:
            data = render_heatmap(html_payload[0], html_payload[1])
        Path(args.html).write_bytes(data)
    return 0


def _cmd_chunk(args) -> int:
    for text in _texts_from_args(args):
        partition = chunking.chunk(chunking.tag(text.tokens, text.pos_tags))
        pieces = [
            "{" + " ".join(text.tokens[p.span.q - 1 : p.span.r]) + "}"
            for p in partition.phrases
        ]
        print(" ".join(pieces))
    return 0


def _write_records(report, path):
    if path:
        Path(path).write_text("\n".join(report.record_lines()) + "\n", encoding="utf-8")


def _cmd_eval_faithfulness(args) -> int:
    model, vocab = _load_model(args.model)
    texts = store.load_dataset(args.data)
    attributor = evaluate.make_attributor(args.method.replace("-", "_"), seed=args.seed)
    report = evaluate.faithfulness(model, vocab, texts, attributor, unit=args.unit)
    report.dataset_id, report.model_id = args.data, args.model
    print(report.summary_table())
    _write_records(report, args.records)
    return 0


def _cmd_eval_interpretability(args) -> int:
    model, vocab = _load_model(args.model)
    texts = store.load_dataset(args.data)
    lexicons = evaluate.SentimentLexicons.from_files(args.pos_lexicon, args.neg_lexicon)
    attributor = evaluate.make_attributor(args.method.replace("-", "_"))
    report = evaluate.interpretability(model, vocab, texts, lexicons, attributor,
                                       positive_class=args.positive_class)
    report.dataset_id, report.model_id = args.data, args.model
    print(report.summary_table())
    _write_records(report, args.records)
    return 0


def _cmd_eval_pos(args) -> int:
    model, vocab = _load_model(args.model)
    texts = store.load_dataset(args.data)
    attributor = evaluate.make_attributor(args.method.replace("-", "_"))
    report = evaluate.pos_distribution(model, vocab, texts, attributor)
    report.dataset_id, report.model_id = args.data, args.model
    print(report.summary_table())
    _write_records(report, args.records)
    return 0


def _cmd_attack(args) -> int:
    model, vocab = _load_model(args.model)
    tokens = args.text.split()
    if not tokens:
        raise DatasetError("--text is empty")
    replacements = [r for r in args.replacements.split(",") if r]
    if not replacements:
        raise UsageError("--replacements is empty")
    for rep in replacements:
        if rep not in vocab:
            print(f'warning: replacement "{rep}" not in vocabulary, mapped to UNK',
                  file=sys.stderr)
    report = evaluate.adversarial_swap(model, vocab, tokens, args.word, replacements)
    print(report.summary_table())
    return 0


_COMMANDS = {
    "gen-toy": _cmd_gen_toy,
    "train": _cmd_train,
    "attribute": _cmd_attribute,
    "chunk": _cmd_chunk,
    "eval-faithfulness": _cmd_eval_faithfulness,
    "eval-interpretability": _cmd_eval_interpretability,
    "eval-pos": _cmd_eval_pos,
    "attack": _cmd_attack,
}


def cli_main(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(str(err), file=sys.stderr)
        return 1
    except SystemExit as err:  # argparse --help
        return int(err.code or 0)
    except (DatasetError, ModelFileError, FileNotFoundError, IsADirectoryError,
            PermissionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
