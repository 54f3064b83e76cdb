"""Command line: rules | train | predict | eval | ablate.

Exit codes: 0 success, 1 usage error, 2 data or model error. Reports and
CoNLL-U go to stdout, logs to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .ablation import AblationError, ablate, comparisons_for, load_run_file
from .conllu import ConlluError, parse_document, read_document, serialize_document
from .corpus import CorpusError, Granularity, load_corpora, load_source_map, top_rules
from .evaluation import EvalError, EvalReport, annotate, evaluate, report_table, report_tsv, score_documents
from .model import MAGIC, ModelError, load_model, save_model
from .rules import RuleError
from .training import Hyperparams, TrainingError, train
from .vectors import VectorError, read_vectors

log = logging.getLogger("lemmatag")

DATA_ERRORS = (OSError, ConlluError, CorpusError, ModelError, RuleError, TrainingError, EvalError,
               AblationError, VectorError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _read_input(path: str):
    if path == "-":
        return parse_document(sys.stdin.read())
    return read_document(path)


def cmd_rules(args) -> int:
    ts = load_corpora(load_source_map(args.config), args.allow_copy)
    out = sys.stdout
    out.write("rule\tfrequency\texamples\n")
    for rule, freq, examples in top_rules(ts.inventory, args.top):
        out.write(f"{rule}\t{freq}\t{', '.join(f'{f}→{l}' for f, l in examples)}\n")
    return 0


def cmd_train(args) -> int:
    sources = load_source_map(args.config)
    if args.granularity:
        sources = sources.with_granularity(args.granularity)
    hp = Hyperparams(epochs=args.epochs, learning_rate=args.lr, seed=args.seed, dev_fraction=args.dev_fraction,
                     dim=args.dim, window=args.window, allow_copy=args.allow_copy)
    ts = load_corpora(sources, hp.allow_copy, args.vectors)
    log.info("training on %d sentences, %d rule classes, %d source ids",
             len(ts.sentences), len(ts.inventory), sources.num_ids)
    result = train(ts, hp)
    save_model(result.params, args.out)
    log.info("kept epoch %d, model written to %s", result.best_epoch, args.out)
    return 0


def cmd_predict(args) -> int:
    params = load_model(args.model)
    doc = _read_input(args.input)
    vectors = read_vectors(args.vectors, doc) if args.vectors else None
    sid = params.sources.resolve_name(args.source)
    if args.source is not None and sid == params.sources.unknown_id:
        log.info("source %r not in the model, using the generic id", args.source)
    sys.stdout.write(serialize_document(annotate(params, doc, sid, vectors)))
    return 0


def _is_model_file(path: str) -> bool:
    try:
        with open(path, "rb") as f:
            return f.read(len(MAGIC)) == MAGIC
    except OSError:
        return False


def cmd_eval(args) -> int:
    paths = list(args.files)
    params = None
    if args.system:
        gold_paths = paths
        if len(args.system) != len(gold_paths):
            raise UsageError("--system must be given once per gold file")
    else:
        if len(paths) < 2 or not _is_model_file(paths[0]):
            if len(paths) >= 1 and Path(paths[0]).exists() and not _is_model_file(paths[0]):
                raise ModelError(f"{paths[0]}: not a LEMMA-ENGINE/1 model file")
            raise UsageError("expected MODEL GOLD... (or GOLD... with --system)")
        params = load_model(paths[0])
        gold_paths = paths[1:]
    groups = _per_file(args.group, gold_paths, "--group")
    sources = _per_file(args.source, gold_paths, "--source")
    vectors = _per_file(args.vectors, gold_paths, "--vectors")
    report = EvalReport()
    for i, path in enumerate(gold_paths):
        gold = read_document(path)
        name = Path(path).name
        if params is None:
            system = read_document(args.system[i])
            report.per_file.append(score_documents(system, gold, name, groups[i], args.case_insensitive))
        else:
            vec = read_vectors(vectors[i], gold) if vectors[i] else None
            sid = params.sources.resolve_name(sources[i])
            report.per_file.append(evaluate(params, gold, sid, vec, name, groups[i], args.case_insensitive))
    if args.tsv:
        Path(args.tsv).write_text(report_tsv(report), encoding="utf-8")
    sys.stdout.write(report_tsv(report) if args.format == "tsv" else report_table(report))
    return 0


def _per_file(values, files, flag):
    if not values:
        return [None] * len(files)
    if len(values) == 1 and len(files) > 1 and flag == "--source":
        return values * len(files)
    if len(values) != len(files):
        raise UsageError(f"{flag} must be given once per gold file")
    return values


def cmd_ablate(args) -> int:
    runs, comparisons = load_run_file(args.run_file)
    if not runs:
        raise UsageError("run file lists no runs")
    report = ablate(runs)
    tsv_path = Path(args.out) if args.out else Path(args.run_file).with_suffix(".tsv")
    tsv_path.write_text(report.to_tsv(), encoding="utf-8")
    out = sys.stdout
    out.write(report.to_table())
    for delta in comparisons_for(report, runs, comparisons):
        out.write("\n" + delta.title + "\n")
        out.write(delta.to_table())
    failed = [r.name for r in report.rows if not r.ok]
    if failed:
        log.error("%d run(s) failed: %s", len(failed), ", ".join(failed))
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lemmatag", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("rules", help="most frequent lemma rules of a corpus")
    r.add_argument("config", help="corpus config JSON")
    r.add_argument("--top", type=int, default=15)
    r.add_argument("--allow-copy", action="store_true")
    r.set_defaults(func=cmd_rules)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("config", help="corpus config JSON")
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--seed", type=int, default=42)
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--lr", type=float, default=0.1)
    t.add_argument("--dev-fraction", type=float, default=0.1)
    t.add_argument("--granularity", choices=[g.value for g in Granularity])
    t.add_argument("--vectors", help="sidecar vectors covering all corpora in config order")
    t.add_argument("--allow-copy", action="store_true")
    t.add_argument("--dim", type=int, default=1 << 20, help="feature hashing dimension")
    t.add_argument("--window", type=int, default=2)
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", help="fill LEMMA and UPOS of a CoNLL-U file")
    pr.add_argument("model")
    pr.add_argument("input", help="CoNLL-U file, or - for stdin")
    pr.add_argument("--source", help="corpus or author name; unknown names use the generic id")
    pr.add_argument("--vectors")
    pr.set_defaults(func=cmd_predict)

    e = sub.add_parser("eval", help="lemma and UPOS accuracy")
    e.add_argument("files", nargs="+", metavar="FILE", help="MODEL GOLD..., or GOLD... with --system")
    e.add_argument("--system", action="append", help="predicted file to score instead of running a model")
    e.add_argument("--group", action="append", help="group label per gold file")
    e.add_argument("--source", action="append", help="source name per gold file (or one for all)")
    e.add_argument("--vectors", action="append", help="sidecar vectors per gold file")
    e.add_argument("--case-insensitive", action="store_true")
    e.add_argument("--format", choices=["table", "tsv"], default="table")
    e.add_argument("--tsv", help="also write the TSV report here")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", help="train and evaluate a grid of runs")
    a.add_argument("run_file")
    a.add_argument("--out", help="TSV report path (default: run file with .tsv suffix)")
    a.set_defaults(func=cmd_ablate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"lemmatag: error: {e}", file=sys.stderr)
        return 1
    except DATA_ERRORS as e:
        print(f"lemmatag: error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        # invalid hyperparameter values
        print(f"lemmatag: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
