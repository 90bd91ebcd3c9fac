"""Command-line front end: corpus preparation, augmentation, and scoring.

Every subcommand reads and writes plain files (CoNLL token/label columns,
JSONL text pairs, JSON reports) so external taggers and seq2seq models can
plug in at any step.  Exit codes: 0 success, 1 usage error, 2 bad data,
3 remote service failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import assets
from .artificial import DmPolicy, generate_split, make_e2e_pair, read_core_elements
from .augment import (
    RemoteUnavailable,
    prepare_discovery_pair,
    prepare_pdtb_pairs,
    read_discovery_tsv,
    read_pdtb_jsonl,
    write_pairs_jsonl,
)
from .core import DataError, read_conll, spans_to_bio, tokenize, write_conll
from .errors import RemoteServiceError
from .extraction import (
    AnnotatedParagraph,
    DmLexicon,
    gold_dms_left_context,
    gold_dms_prefix_split,
    remove_explicit_dms,
)
from .metrics import (
    EmbeddingTable,
    MetricResources,
    SenseLexicon,
    cohens_kappa,
    coverage_report,
    explicit_accuracy_report,
    pearson,
)
from .pipeline import RunConfig, backproject_predictions, evaluate_run, prepare_downstream_batch

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_REMOTE = 3


class _UsageError(Exception):
    """Raised instead of argparse's SystemExit so main() owns the exit code."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# Shared option plumbing
# ---------------------------------------------------------------------------


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--input-mode",
        choices=("original", "removed_dms"),
        default="original",
        help="feed sequences as-is, or strip explicit markers first",
    )
    sub.add_argument(
        "--augmenter",
        choices=("none", "rule", "remote"),
        default="none",
        help="how marker text gets (re)inserted",
    )
    sub.add_argument("--endpoint", help="base URL of the remote augmentation service")
    sub.add_argument("--schema", default="artificial", help="label schema / role map name")
    sub.add_argument("--seed", type=int, default=13, help="policy seed for rule choices")


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        input_mode=args.input_mode,
        augmenter=args.augmenter,
        endpoint=args.endpoint,
        schema=args.schema,
        seed=args.seed,
    )


def _prepared_instances(args: argparse.Namespace):
    cfg = _run_config(args)
    records = read_conll(args.input)
    instances = prepare_downstream_batch(records, cfg)
    failed = [inst for inst in instances if not inst.ok]
    if failed:
        print(f"{len(failed)}/{len(instances)} sequences failed", file=sys.stderr)
        for idx, inst in enumerate(instances):
            if not inst.ok:
                print(f"  #{idx}: {inst.failed_stage}: {inst.error}", file=sys.stderr)
    if (
        cfg.augmenter == "remote"
        and instances
        and all(inst.failed_stage == "augment" for inst in instances)
    ):
        # nothing got through at all: surface it as a service failure,
        # not a silently empty output file
        raise RemoteUnavailable(failed[0].error or "remote augmentation failed")
    return instances


def _metric_resources(args: argparse.Namespace) -> MetricResources:
    vectors = args.vectors or assets.default_vectors_path()
    table = EmbeddingTable.load(vectors)
    lexicons = {
        "arg_marker": assets.default_sense_lexicon_path("arg_marker"),
        "disc_rel": assets.default_sense_lexicon_path("disc_rel"),
    }
    for spec in args.lexicon or ():
        kind, sep, path = spec.partition("=")
        if not sep or kind not in lexicons:
            raise _UsageError(
                f"--lexicon wants arg_marker=PATH or disc_rel=PATH, got {spec!r}"
            )
        lexicons[kind] = path
    return MetricResources(
        word_table=table,
        arg_lexicon=SenseLexicon.load(lexicons["arg_marker"], "arg_marker"),
        rel_lexicon=SenseLexicon.load(lexicons["disc_rel"], "disc_rel"),
    )


def _emit_json(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_generate_artificial(args: argparse.Namespace) -> None:
    cores = read_core_elements(args.cores or assets.default_cores_path())
    samples = generate_split(cores, policy=DmPolicy(seed=args.seed))
    sequences = []
    for sample in samples:
        tokens = tokenize(sample.full_text)
        sequences.append((tokens, spans_to_bio(sample.adu_spans, len(tokens))))
    write_conll(args.out, sequences)
    if args.pairs:
        write_pairs_jsonl(args.pairs, [make_e2e_pair(s) for s in samples])
    print(f"wrote {len(sequences)} sequences", file=sys.stderr)


def _cmd_extract_dms(args: argparse.Namespace) -> None:
    records = []
    for tokens, labels in read_conll(args.input):
        paragraph = AnnotatedParagraph.from_labels(tokens, labels)
        if args.method == "prefix":
            lexicon = DmLexicon.load(args.lexicon or assets.default_dm_lexicon_path())
            _, slots = gold_dms_prefix_split(paragraph, lexicon)
        else:
            slots = gold_dms_left_context(paragraph)
        records.append(
            [
                {"unit": slot.adu_index, "role": paragraph.adus[slot.adu_index].label, "text": slot.text}
                for slot in slots
            ]
        )
    with open(args.out, "w", encoding="utf-8") as handle:
        for markers in records:
            handle.write(json.dumps({"markers": markers}) + "\n")
    print(f"wrote markers for {len(records)} sequences", file=sys.stderr)


def _cmd_remove_dms(args: argparse.Namespace) -> None:
    sequences = []
    for tokens, labels in read_conll(args.input):
        paragraph = AnnotatedParagraph.from_labels(tokens, labels)
        stripped = remove_explicit_dms(paragraph, gold_dms_left_context(paragraph))
        sequences.append((list(stripped.tokens), stripped.labels()))
    write_conll(args.out, sequences)
    print(f"wrote {len(sequences)} sequences", file=sys.stderr)


def _cmd_augment(args: argparse.Namespace) -> None:
    instances = _prepared_instances(args)
    pairs = [(i.source_text, i.augmented_text) for i in instances if i.ok]
    write_pairs_jsonl(args.out, pairs)
    print(f"wrote {len(pairs)} text pairs", file=sys.stderr)


def _cmd_prepare_pairs(args: argparse.Namespace) -> None:
    suffix = Path(args.input).suffix.lower()
    fmt = args.format or ("pdtb" if suffix in (".jsonl", ".json") else "discovery")
    if fmt == "discovery":
        pairs = [prepare_discovery_pair(p) for p in read_discovery_tsv(args.input)]
    else:
        pairs = [prepare_pdtb_pairs(doc) for doc in read_pdtb_jsonl(args.input)]
    write_pairs_jsonl(args.out, pairs)
    print(f"wrote {len(pairs)} text pairs", file=sys.stderr)


def _cmd_project(args: argparse.Namespace) -> None:
    instances = _prepared_instances(args)
    sequences = [
        (list(i.augmented_tokens), list(i.projected_labels)) for i in instances if i.ok
    ]
    write_conll(args.out, sequences)
    print(f"wrote {len(sequences)} projected sequences", file=sys.stderr)


def _cmd_eval_dm(args: argparse.Namespace) -> None:
    instances = _prepared_instances(args)
    healthy = [inst for inst in instances if inst.ok and inst.gold_slots]
    if not healthy:
        raise DataError("no sequence survived preparation; nothing to score")
    gold = [list(inst.gold_slots) for inst in healthy]
    pred = [list(inst.predicted_slots) for inst in healthy]
    resources = _metric_resources(args)
    report = explicit_accuracy_report(gold, pred, resources)
    payload = {
        "sequences": len(healthy),
        "coverage": coverage_report(gold, pred),
        "accuracy": report.as_dict(),
    }
    _emit_json(payload, args.out)


def _cmd_eval_downstream(args: argparse.Namespace) -> None:
    instances = _prepared_instances(args)
    predictions = read_conll(args.predictions)
    healthy = [inst for inst in instances if inst.ok]
    if len(predictions) != len(healthy):
        raise DataError(
            f"{len(predictions)} predicted sequences for {len(healthy)} prepared ones"
        )
    for idx, (inst, (ptokens, plabels)) in enumerate(zip(healthy, predictions)):
        if list(ptokens) != list(inst.augmented_tokens):
            raise DataError(f"prediction #{idx} tokens do not match the prepared sequence")
        inst.predicted_labels = tuple(plabels)
        backproject_predictions(inst)
    resources = _metric_resources(args) if (args.vectors or args.lexicon) else None
    report = evaluate_run(instances, resources)
    _emit_json(report.as_dict(), args.out)


def _cmd_agreement(args: argparse.Namespace) -> None:
    first: list[str] = []
    second: list[str] = []
    with open(args.input, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if header.split("\t") != ["a", "b"]:
            raise DataError(f"{args.input}:1: expected header 'a<TAB>b', got {header!r}")
        for lineno, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            cells = line.rstrip("\n").split("\t")
            if len(cells) != 2:
                raise DataError(f"{args.input}:{lineno}: expected two columns")
            first.append(cells[0])
            second.append(cells[1])
    if not first:
        raise DataError(f"{args.input}: no rating rows")
    payload: dict = {"items": len(first), "kappa": cohens_kappa(first, second)}
    try:
        x = [float(v) for v in first]
        y = [float(v) for v in second]
    except ValueError:
        payload["pearson"] = None
    else:
        try:
            payload["pearson"] = pearson(x, y)
        except DataError:
            payload["pearson"] = None
    _emit_json(payload, args.out)


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="dmaug", description=__doc__)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")

    sub = commands.add_parser(
        "generate-artificial", help="render the synthetic argument corpus"
    )
    sub.add_argument("--cores", help="core-elements TSV/JSONL (default: packaged demo)")
    sub.add_argument("--seed", type=int, default=13)
    sub.add_argument("--out", required=True, help="CoNLL output path")
    sub.add_argument("--pairs", help="also write seq2seq text pairs here (JSONL)")
    sub.set_defaults(handler=_cmd_generate_artificial)

    sub = commands.add_parser("extract-dms", help="list the marker of every unit")
    sub.add_argument("input", help="CoNLL file with BIO unit labels")
    sub.add_argument("--method", choices=("left-context", "prefix"), default="left-context")
    sub.add_argument("--lexicon", help="marker list for --method prefix")
    sub.add_argument("--out", required=True, help="JSONL output path")
    sub.set_defaults(handler=_cmd_extract_dms)

    sub = commands.add_parser("remove-dms", help="strip explicit markers, repair grammar")
    sub.add_argument("input", help="CoNLL file with BIO unit labels")
    sub.add_argument("--out", required=True, help="CoNLL output path")
    sub.set_defaults(handler=_cmd_remove_dms)

    sub = commands.add_parser("augment", help="produce augmented text for each sequence")
    sub.add_argument("input", help="CoNLL file with BIO unit labels")
    _add_run_flags(sub)
    sub.add_argument("--out", required=True, help="JSONL text-pair output path")
    sub.set_defaults(handler=_cmd_augment)

    sub = commands.add_parser(
        "prepare-pairs", help="build seq2seq training pairs from relation corpora"
    )
    sub.add_argument("input", help="sentence-pair TSV or relation-document JSONL")
    sub.add_argument("--format", choices=("discovery", "pdtb"), help="override inference from the file suffix")
    sub.add_argument("--out", required=True, help="JSONL text-pair output path")
    sub.set_defaults(handler=_cmd_prepare_pairs)

    sub = commands.add_parser(
        "project", help="augment and carry unit labels onto the new tokens"
    )
    sub.add_argument("input", help="CoNLL file with BIO unit labels")
    _add_run_flags(sub)
    sub.add_argument("--out", required=True, help="CoNLL output path (augmented tokens)")
    sub.set_defaults(handler=_cmd_project)

    sub = commands.add_parser("eval-dm", help="score predicted markers against gold ones")
    sub.add_argument("input", help="CoNLL file with BIO unit labels")
    _add_run_flags(sub)
    sub.add_argument("--vectors", help="word-vector table (default: packaged demo vectors)")
    sub.add_argument(
        "--lexicon",
        action="append",
        metavar="KIND=PATH",
        help="sense lexicon override; KIND is arg_marker or disc_rel",
    )
    sub.add_argument("--out", help="JSON report path (default: stdout)")
    sub.set_defaults(handler=_cmd_eval_dm)

    sub = commands.add_parser(
        "eval-downstream", help="back-project tagger output and score it"
    )
    sub.add_argument("input", help="CoNLL file with gold BIO labels (original tokens)")
    sub.add_argument(
        "--predictions", required=True, help="CoNLL tagger output over the augmented tokens"
    )
    _add_run_flags(sub)
    sub.add_argument("--vectors", help="word-vector table enabling marker accuracy scores")
    sub.add_argument("--lexicon", action="append", metavar="KIND=PATH")
    sub.add_argument("--out", help="JSON report path (default: stdout)")
    sub.set_defaults(handler=_cmd_eval_downstream)

    sub = commands.add_parser("agreement", help="inter-rater agreement over paired ratings")
    sub.add_argument("input", help="two-column TSV with header 'a<TAB>b'")
    sub.add_argument("--out", help="JSON report path (default: stdout)")
    sub.set_defaults(handler=_cmd_agreement)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "handler", None):
            raise _UsageError("a subcommand is required")
        args.handler(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RemoteServiceError as exc:
        print(f"remote service error: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
