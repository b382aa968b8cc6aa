"""Command-line front end for the generation pipeline.

Subcommands cover the whole workflow: import raw datasets, extract templates,
mine fusion training pairs, build the phrase vocabulary, generate text,
evaluate a run, and pretty-print decoding traces. Every subcommand writes its
outputs atomically (temp file + rename) so a failure never leaves a partial
file, and identical inputs produce byte-identical outputs.

Exit codes: 0 success, 1 validation or usage error, 2 backend/transport error.
Configuration precedence: flags, then the FUSEGEN_ENDPOINT environment
variable (endpoint only), then the --config file, then built-in defaults.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import tempfile
from typing import Callable, Optional, Sequence

from .checking import SlotPatternTable, load_slot_patterns
from .data import (
    DataError,
    Dataset,
    import_e2e,
    import_webnlg,
    load_jsonl,
    save_jsonl,
)
from .decoder import CHECKERS, DecoderConfig, StepTrace, generate
from .editing import build_vocabulary, lcs_align, save_vocabulary, surfaces
from .fusion import FusionModel, IdentityFuser, RemoteFuser, RuleFuser
from .metrics import report, save_report
from .mining import (
    STRATEGIES,
    filter_discofuse,
    load_discofuse,
    load_pairs,
    mine_pairs,
    save_pairs,
)
from .remote import RemoteBackendError
from .scoring import NGramScorer, RemoteScorer, Scorer, train_ngram
from .templates import (
    TemplateStore,
    extract_pair_templates,
    extract_single_templates,
    load_templates,
    save_templates,
)

ENDPOINT_ENV = "FUSEGEN_ENDPOINT"
DEFAULT_ENDPOINT = "http://127.0.0.1:8000"
DEFAULT_BEAM_SIZE = 10
DEFAULT_VOCAB_SIZE = 100
DEFAULT_STRATEGY = "all"
DEFAULT_CHECKER = "entities"

CONFIG_KEYS = frozenset(
    {"dataset", "templates", "endpoint", "beam_size", "vocab_size", "strategy", "checker"}
)

UNDERLINE = "\x1b[4m"
STRIKE = "\x1b[9m"
RESET = "\x1b[0m"


class UsageError(Exception):
    """Bad flags or config; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse wants to sys.exit on errors; surface them as exceptions so
    # main() owns every exit code.
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def load_config(path: str) -> dict:
    """Parse a key=value config file; unknown keys are rejected."""
    config: dict = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key or not value:
                raise UsageError(f"{path}:{lineno}: expected key = value, got {raw.rstrip()!r}")
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            config[key] = value
    if "beam_size" in config:
        config["beam_size"] = _positive_int(config["beam_size"], "beam_size")
    if "vocab_size" in config:
        config["vocab_size"] = _positive_int(config["vocab_size"], "vocab_size")
    if "strategy" in config and config["strategy"] not in STRATEGIES:
        raise UsageError(f"config strategy must be one of {', '.join(STRATEGIES)}")
    if "checker" in config and config["checker"] not in CHECKERS:
        raise UsageError(f"config checker must be one of {', '.join(CHECKERS)}")
    return config


def _positive_int(value, name: str) -> int:
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be an integer, got {value!r}") from None
    if number < 1:
        raise UsageError(f"{name} must be >= 1, got {number}")
    return number


def _setting(flag_value, config: dict, key: str, default=None):
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def _endpoint(args, config: dict) -> str:
    flag = getattr(args, "endpoint", None)
    if flag:
        return flag
    env = os.environ.get(ENDPOINT_ENV)
    if env:
        return env
    return config.get("endpoint", DEFAULT_ENDPOINT)


def atomic_write(path: str, writer: Callable[[str], None]) -> None:
    """Run `writer` against a temp path, then rename over `path`."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".fusegen-", dir=directory)
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _load_dataset(path: str, split: str = "train") -> Dataset:
    return load_jsonl(path, split=split)


def _load_template_stores(paths: Sequence[str]) -> TemplateStore:
    store = TemplateStore()
    for path in paths:
        store = store.merged_with(load_templates(path))
    return store


def _build_scorer(kind: str, endpoint: str, train_data: Optional[Dataset]) -> Scorer:
    if kind == "remote":
        return RemoteScorer(endpoint)
    references = [] if train_data is None else [
        ref for example in train_data.examples for ref in example.references
    ]
    if not references:
        raise UsageError("the ngram scorer needs reference texts to train on")
    return NGramScorer(train_ngram(references))


def _build_fuser(kind: str, endpoint: str) -> FusionModel:
    if kind == "identity":
        return IdentityFuser()
    if kind == "rules":
        return RuleFuser()
    return RemoteFuser(endpoint)


def _slot_table(args) -> Optional[SlotPatternTable]:
    if getattr(args, "checker", None) != "slots":
        return None
    return load_slot_patterns(getattr(args, "slot_patterns", None))


# --- subcommand handlers ---


def _cmd_import(args, config) -> int:
    importer = {"jsonl": load_jsonl, "e2e": import_e2e, "webnlg": import_webnlg}[args.format]
    dataset = importer(args.input, split=args.split)
    atomic_write(args.out, lambda tmp: save_jsonl(dataset, tmp))
    print(f"imported {len(dataset.examples)} examples -> {args.out}")
    return 0


def _cmd_extract_templates(args, config) -> int:
    dataset_path = _setting(args.dataset, config, "dataset")
    if dataset_path is None:
        raise UsageError("extract-templates needs --dataset")
    dataset = _load_dataset(dataset_path)
    extractor = extract_single_templates if args.mode == "single" else extract_pair_templates
    store = extractor(dataset)
    atomic_write(args.out, lambda tmp: save_templates(store, tmp))
    print(f"extracted {len(store.all_templates())} {args.mode} templates -> {args.out}")
    return 0


def _cmd_mine_pairs(args, config) -> int:
    if args.discofuse:
        pairs = filter_discofuse(load_discofuse(args.discofuse))
    else:
        dataset_path = _setting(args.dataset, config, "dataset")
        template_paths = args.templates or _split_paths(config.get("templates"))
        if dataset_path is None or not template_paths:
            raise UsageError("mine-pairs needs --dataset and --templates (or --discofuse)")
        dataset = _load_dataset(dataset_path)
        store = _load_template_stores(template_paths)
        strategy = _setting(args.strategy, config, "strategy", DEFAULT_STRATEGY)
        scorer = _build_scorer(args.scorer, _endpoint(args, config), dataset)
        pairs = mine_pairs(dataset, store, scorer, strategy=strategy)
    atomic_write(args.out, lambda tmp: save_pairs(pairs, tmp))
    print(f"mined {len(pairs)} fusion pairs -> {args.out}")
    return 0


def _cmd_build_vocab(args, config) -> int:
    size = args.size if args.size is not None else config.get("vocab_size", DEFAULT_VOCAB_SIZE)
    pairs = load_pairs(args.pairs)
    if not pairs:
        raise UsageError(f"{args.pairs}: no pairs to build a vocabulary from")
    vocab = build_vocabulary([(p.source, p.target) for p in pairs], capacity=size)
    atomic_write(args.out, lambda tmp: save_vocabulary(vocab, tmp))
    print(f"vocabulary of {len(vocab.phrases)} phrases (capacity {size}) -> {args.out}")
    return 0


def _split_paths(value) -> list:
    if not value:
        return []
    return [part.strip() for part in str(value).split(",") if part.strip()]


def _cmd_generate(args, config) -> int:
    dataset_path = _setting(args.dataset, config, "dataset")
    template_paths = args.templates or _split_paths(config.get("templates"))
    if dataset_path is None or not template_paths:
        raise UsageError("generate needs --dataset and --templates")
    dataset = _load_dataset(dataset_path)
    store = _load_template_stores(template_paths)
    endpoint = _endpoint(args, config)
    train_data = _load_dataset(args.scorer_train) if args.scorer_train else dataset
    scorer = _build_scorer(args.scorer, endpoint, train_data)
    fuser = _build_fuser(args.fuser, endpoint)
    beam_size = _positive_int(
        args.beam_size if args.beam_size is not None else config.get("beam_size", DEFAULT_BEAM_SIZE),
        "beam size",
    )
    checker = _setting(args.checker, config, "checker", DEFAULT_CHECKER)
    decoder_config = DecoderConfig(
        beam_size=beam_size,
        checker=checker,
        slot_patterns=load_slot_patterns(args.slot_patterns) if checker == "slots" else None,
        max_triples=args.max_triples,
        person_entities=frozenset(_split_paths(args.person_entities)),
    )
    texts: list[str] = []
    trace_rows: list[dict] = []
    fallback_steps = 0
    fusion_steps = 0
    for example in dataset.examples:
        text, steps = generate(example, store, scorer, fuser, decoder_config)
        texts.append(text)
        for step in steps:
            trace_rows.append(step.as_dict(example.id))
            if step.index >= 1:
                fusion_steps += 1
                fallback_steps += step.fallback
    atomic_write(args.out, lambda tmp: _write_lines(tmp, texts))
    if args.trace:
        atomic_write(args.trace, lambda tmp: _write_jsonl(tmp, trace_rows))
    rate = f", {fallback_steps}/{fusion_steps} fallbacks" if fusion_steps else ""
    print(f"generated {len(texts)} texts{rate} -> {args.out}")
    return 0


def _write_lines(path: str, lines: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for line in lines:
            handle.write(line + "\n")


def _write_jsonl(path: str, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def _load_trace_rows(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as err:
                raise DataError(f"{path}:{lineno}: invalid trace row: {err}") from None
            if not isinstance(row, dict) or "index" not in row:
                raise DataError(f"{path}:{lineno}: trace row missing fields")
            rows.append(row)
    return rows


def _traces_from_rows(rows: Sequence[dict]) -> list[StepTrace]:
    return [
        StepTrace(
            index=int(row["index"]),
            lexicalization=str(row.get("lexicalization", "")),
            beam_before=(),
            beam_after=(),
            chosen=str(row.get("chosen", "")),
            fallback=bool(row.get("fallback", False)),
        )
        for row in rows
    ]


def _cmd_evaluate(args, config) -> int:
    dataset_path = _setting(args.dataset, config, "dataset")
    if dataset_path is None:
        raise UsageError("evaluate needs --dataset")
    dataset = _load_dataset(dataset_path)
    with open(args.hyp, encoding="utf-8") as handle:
        hypotheses = [line.rstrip("\n") for line in handle]
    while hypotheses and not hypotheses[-1]:
        hypotheses.pop()
    traces = _traces_from_rows(_load_trace_rows(args.traces)) if args.traces else None
    template_paths = args.templates or _split_paths(config.get("templates"))
    store = _load_template_stores(template_paths) if template_paths else None
    checker = _setting(args.checker, config, "checker", DEFAULT_CHECKER)
    result = report(
        hypotheses,
        dataset,
        traces=traces,
        store=store,
        checker=checker,
        slot_patterns=load_slot_patterns(args.slot_patterns) if checker == "slots" else None,
        scorer_backend=args.scorer,
        fuser_backend=args.fuser,
    )
    atomic_write(args.out, lambda tmp: save_report(result, tmp))
    print(
        f"bleu {result.bleu:.4f}  rouge-l {result.rouge_l:.4f}  "
        f"entity errors {result.entity_error_rate:.4f} -> {args.out}"
    )
    return 0


def _diff_segments(before: list[str], after: list[str], boundary: int):
    """Classify tokens of a (before, after) pair for rendering.

    `before` is the previous text plus the new lexicalization; tokens of
    `after` that match before position `boundary` are old content, matches at
    or past it are newly contributed, everything unmatched on the before side
    was deleted by fusion and everything unmatched on the after side was
    inserted by it.
    """
    matches = lcs_align(before, after)
    segments: list[tuple[str, str]] = []
    i = j = 0
    for bi, aj in matches + [(len(before), len(after))]:
        while i < bi:
            segments.append(("deleted", before[i]))
            i += 1
        while j < aj:
            segments.append(("added", after[j]))
            j += 1
        if bi < len(before):
            segments.append(("kept" if bi < boundary else "added", after[aj]))
            i, j = bi + 1, aj + 1
    return segments


def _render_segments(segments) -> str:
    parts = []
    for kind, group in itertools.groupby(segments, key=lambda seg: seg[0]):
        chunk = " ".join(token for _, token in group)
        if kind == "added":
            parts.append(f"{UNDERLINE}{chunk}{RESET}")
        elif kind == "deleted":
            parts.append(f"{STRIKE}{chunk}{RESET}")
        else:
            parts.append(chunk)
    return " ".join(parts)


def render_trace(rows: Sequence[dict]) -> str:
    """Human-readable rendering of a decoding trace.

    Underlined tokens are new in this step, struck-through tokens were
    removed by fusion; a step that fell back to plain concatenation is
    labeled explicitly.
    """
    lines: list[str] = []
    steps = 0
    fallbacks = 0
    for example_id, group in itertools.groupby(rows, key=lambda r: r.get("example_id", "")):
        lines.append(f"=== {example_id or '(unnamed)'} ===")
        previous = ""
        for row in group:
            steps += 1
            index = int(row["index"])
            chosen = str(row.get("chosen", ""))
            lex = str(row.get("lexicalization", ""))
            lines.append(f"Step #{index}: {lex}")
            if index == 0:
                lines.append(f"  X{index}: {chosen}")
            else:
                before = surfaces(previous + " " + lex)
                boundary = len(surfaces(previous))
                lines.append(
                    f"  beam {len(row.get('beam_before', []))} -> "
                    f"{len(row.get('beam_after', []))} after filtering"
                )
                lines.append(f"  X{index}: " + _render_segments(
                    _diff_segments(before, surfaces(chosen), boundary)
                ))
                if row.get("fallback"):
                    fallbacks += 1
                    lines.append("  FALLBACK (no fusion)")
            previous = chosen
        lines.append("")
    lines.append(f"{steps} steps, {fallbacks} fallbacks")
    return "\n".join(lines)


def _cmd_show_trace(args, config) -> int:
    print(render_trace(_load_trace_rows(args.trace)))
    return 0


# --- argument wiring ---


def _add_endpoint(parser) -> None:
    parser.add_argument(
        "--endpoint",
        help=f"backend base URL (or set {ENDPOINT_ENV})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fusegen", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value configuration file")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("import", help="convert a raw dataset to interchange JSONL")
    p.add_argument("--format", choices=("jsonl", "e2e", "webnlg"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=("train", "dev", "test"), default="train")
    p.set_defaults(handler=_cmd_import)

    p = sub.add_parser("extract-templates", help="extract templates from a dataset")
    p.add_argument("--dataset")
    p.add_argument("--mode", choices=("single", "pair"), default="single")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_extract_templates)

    p = sub.add_parser("mine-pairs", help="mine sentence-fusion training pairs")
    p.add_argument("--dataset")
    p.add_argument("--templates", action="append")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--discofuse", help="filter a DiscoFuse TSV instead of mining a dataset")
    p.add_argument("--scorer", choices=("ngram", "remote"), default="ngram")
    p.add_argument("--out", required=True)
    _add_endpoint(p)
    p.set_defaults(handler=_cmd_mine_pairs)

    p = sub.add_parser("build-vocab", help="build the insertion phrase vocabulary")
    p.add_argument("--pairs", required=True)
    p.add_argument("--size", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_build_vocab)

    p = sub.add_parser("generate", help="generate text for every example")
    p.add_argument("--dataset")
    p.add_argument("--templates", action="append")
    p.add_argument("--scorer", choices=("ngram", "remote"), default="ngram")
    p.add_argument("--scorer-train", help="JSONL dataset whose references train the ngram scorer")
    p.add_argument("--fuser", choices=("identity", "rules", "remote"), default="identity")
    p.add_argument("--beam-size", type=int)
    p.add_argument("--checker", choices=CHECKERS)
    p.add_argument("--slot-patterns", help="slot pattern JSON (defaults to the bundled table)")
    p.add_argument("--max-triples", type=int)
    p.add_argument("--person-entities", help="comma-separated entities referred to as persons")
    p.add_argument("--trace", help="write the decoding trace JSONL here")
    p.add_argument("--out", required=True)
    _add_endpoint(p)
    p.set_defaults(handler=_cmd_generate)

    p = sub.add_parser("evaluate", help="score a hypothesis file against a dataset")
    p.add_argument("--hyp", required=True)
    p.add_argument("--dataset")
    p.add_argument("--traces")
    p.add_argument("--templates", action="append")
    p.add_argument("--checker", choices=CHECKERS)
    p.add_argument("--slot-patterns")
    p.add_argument("--scorer", choices=("ngram", "remote"), default="ngram")
    p.add_argument("--fuser", choices=("identity", "rules", "remote"), default="identity")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("show-trace", help="pretty-print a decoding trace")
    p.add_argument("--trace", required=True)
    p.set_defaults(handler=_cmd_show_trace)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = load_config(args.config) if args.config else {}
        return args.handler(args, config)
    except UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except RemoteBackendError as err:
        print(f"fusegen: backend error: {err}", file=sys.stderr)
        return 2
    except (DataError, ValueError, KeyError, OSError) as err:
        print(f"fusegen: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
