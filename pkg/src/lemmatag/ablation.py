"""Ablation grids over corpus granularity and external vectors, and mean-delta summaries."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .conllu import read_document
from .corpus import Granularity, load_corpora, load_source_map
from .evaluation import EvalReport, align_table, evaluate, fmt_acc
from .training import Hyperparams, train
from .vectors import read_vectors

log = logging.getLogger(__name__)

METRICS = ("lemma", "upos")


class AblationError(ValueError):
    pass


@dataclass(frozen=True)
class TestSpec:
    path: str
    group: str
    source: str | None = None
    vectors: str | None = None
    model: str | None = None  # name of the run whose model scores this file


@dataclass(frozen=True)
class RunConfig:
    name: str
    corpus_config: str
    granularity: str | None = None
    external_vectors: str | None = None
    hyperparams: dict = field(default_factory=dict)
    tests: tuple[TestSpec, ...] = ()

    def signature(self) -> str:
        """Everything but name and vectors; runs sharing it differ only in the vectors toggle."""
        return json.dumps([self.corpus_config, self.granularity, self.hyperparams,
                           [(t.path, t.group, t.source, t.model) for t in self.tests]], sort_keys=True)


@dataclass(frozen=True)
class Comparison:
    title: str
    a: tuple[str, ...]
    b: tuple[str, ...]


def _resolve(base: Path, p):
    return None if p is None else str(base / p)


def load_run_file(path: str | Path) -> tuple[list[RunConfig], list[Comparison]]:
    path = Path(path)
    base = path.parent
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise AblationError(f"cannot read run file {path}: {e}") from e
    runs = []
    try:
        for r in data["runs"]:
            tests = tuple(TestSpec(_resolve(base, t["path"]), t.get("group", Path(t["path"]).stem),
                                   t.get("source"), _resolve(base, t.get("vectors")), t.get("model"))
                          for t in r.get("tests", []))
            runs.append(RunConfig(r["name"], _resolve(base, r["corpus_config"]), r.get("granularity"),
                                  _resolve(base, r.get("external_vectors")), dict(r.get("hyperparams", {})),
                                  tests))
        comparisons = [Comparison(c["title"], tuple(c["a"]), tuple(c["b"])) for c in data.get("comparisons", [])]
    except (KeyError, TypeError) as e:
        raise AblationError(f"malformed run file {path}: {e}") from e
    names = [r.name for r in runs]
    if len(set(names)) != len(names):
        raise AblationError("run names must be unique")
    return runs, comparisons


@dataclass
class AblationRow:
    name: str
    granularity: str
    vectors: bool
    report: EvalReport | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class AblationReport:
    rows: list[AblationRow]

    def groups(self) -> list[str]:
        seen: list[str] = []
        for row in self.rows:
            for g in (row.report.groups() if row.report else []):
                if g not in seen:
                    seen.append(g)
        return seen

    def row(self, name: str) -> AblationRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def cells(self, row: AblationRow) -> list[str]:
        out = []
        for g in self.groups():
            if row.report is None or g not in row.report.groups():
                out.extend(["-", "-"])
            else:
                s = row.report.group_score(g)
                out.extend([fmt_acc(s.lemma_accuracy), fmt_acc(s.upos_accuracy)])
        return out

    def to_tsv(self) -> str:
        header = ["run", "granularity", "vectors", "status"]
        header += [f"{g}:{m}" for g in self.groups() for m in METRICS]
        lines = ["\t".join(header)]
        for r in self.rows:
            status = "ok" if r.ok else "failed: " + r.error.replace("\t", " ").replace("\n", " ")
            lines.append("\t".join([r.name, r.granularity, "yes" if r.vectors else "no", status, *self.cells(r)]))
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        groups = self.groups()
        rows = [["run", "granularity", "vectors", *(f"{g} {m}" for g in groups for m in METRICS)]]
        for r in self.rows:
            rows.append([r.name + ("" if r.ok else " (failed)"), r.granularity, "yes" if r.vectors else "no",
                         *self.cells(r)])
        return align_table(rows)


def _train_run(run: RunConfig):
    sources = load_source_map(run.corpus_config)
    if run.granularity is not None:
        sources = sources.with_granularity(Granularity(run.granularity))
    hp = Hyperparams.from_json(run.hyperparams)
    ts = load_corpora(sources, hp.allow_copy, run.external_vectors)
    return train(ts, hp).params


def _evaluate_run(run: RunConfig, models: dict) -> EvalReport:
    report = EvalReport()
    for t in run.tests:
        owner = t.model or run.name
        if owner not in models:
            raise AblationError(f"test {t.path} routes to unknown or failed run {owner!r}")
        params = models[owner]
        gold = read_document(t.path)
        vectors = None
        if params.config.vector_width:
            if t.vectors is None:
                raise AblationError(f"test {t.path} needs external vectors for run {owner!r}")
            vectors = read_vectors(t.vectors, gold)
        sid = params.sources.resolve_name(t.source)
        report.per_file.append(evaluate(params, gold, sid, vectors, Path(t.path).name, t.group))
    return report


def ablate(runs: list[RunConfig]) -> AblationReport:
    """Train every run, then score its tests; a failing run is marked and the grid continues."""
    models, errors = {}, {}
    for run in runs:
        try:
            models[run.name] = _train_run(run)
        except Exception as e:  # noqa: BLE001 -- any failure marks the row, the grid goes on
            log.error("run %s failed during training: %s", run.name, e)
            errors[run.name] = str(e)
    rows = []
    for run in runs:
        granularity = run.granularity or _config_granularity(run)
        row = AblationRow(run.name, granularity, run.external_vectors is not None)
        if run.name in errors:
            row.error = errors[run.name]
        else:
            try:
                row.report = _evaluate_run(run, models)
            except Exception as e:  # noqa: BLE001
                log.error("run %s failed during evaluation: %s", run.name, e)
                row.error = str(e)
        rows.append(row)
    return AblationReport(rows)


def _config_granularity(run: RunConfig) -> str:
    try:
        return load_source_map(run.corpus_config).granularity.value
    except Exception:  # noqa: BLE001
        return "?"


@dataclass
class DeltaReport:
    title: str
    columns: list[tuple[str, str]]
    values: list[float]
    pairs: int

    def formatted(self) -> list[str]:
        return [format_delta(v) for v in self.values]

    def to_table(self) -> str:
        rows = [["", *(f"{g} {m}" for g, m in self.columns)], [self.title, *self.formatted()]]
        return align_table(rows)


def format_delta(x: float) -> str:
    s = f"{x:+.3f}"
    return "+0.000" if s == "-0.000" else s


def delta_report(a: list[EvalReport], b: list[EvalReport], title: str = "") -> DeltaReport:
    """Mean of (a - b) in percentage points per group and metric over paired reports."""
    if len(a) != len(b) or not a:
        raise AblationError(f"cannot pair {len(a)} reports with {len(b)}")
    groups = a[0].groups()
    for ra, rb in zip(a, b):
        if ra.groups() != groups or rb.groups() != groups:
            raise AblationError("paired reports have different test groups")
    columns = [(g, m) for g in groups for m in METRICS]
    values = []
    for g, m in columns:
        diffs = []
        for ra, rb in zip(a, b):
            x = getattr(ra.group_score(g), f"{m}_accuracy")
            y = getattr(rb.group_score(g), f"{m}_accuracy")
            if x is None or y is None:
                raise AblationError(f"group {g} has no {m} scores")
            diffs.append(x - y)
        values.append(sum(diffs) / len(diffs))
    return DeltaReport(title, columns, values, len(a))


VECTORS_TITLE = "Mean improvement with external vectors (pp)"


def comparisons_for(report: AblationReport, runs: list[RunConfig],
                    explicit: list[Comparison]) -> list[DeltaReport]:
    """Delta summaries: explicit comparisons, plus every with/without-vectors pair found in the grid."""
    out = []
    for c in explicit:
        rows_a = [report.row(n) for n in c.a]
        rows_b = [report.row(n) for n in c.b]
        if all(r.ok for r in rows_a + rows_b):
            out.append(delta_report([r.report for r in rows_a], [r.report for r in rows_b], c.title))
    with_v = [r for r in runs if r.external_vectors is not None]
    without = {r.signature(): r for r in runs if r.external_vectors is None}
    pa, pb = [], []
    for r in with_v:
        other = without.get(r.signature())
        if other is not None and report.row(r.name).ok and report.row(other.name).ok:
            pa.append(report.row(r.name).report)
            pb.append(report.row(other.name).report)
    if pa:
        out.append(delta_report(pa, pb, VECTORS_TITLE))
    return out
