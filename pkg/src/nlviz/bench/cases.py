"""Benchmark corpus loading, VQL parsing, and the case filter chain."""

from __future__ import annotations

import csv
import json
import logging
import re
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path

from ..chart import ChartExtract, chart_from_wire
from ..compare import VectorPair
from ..errors import MalformedSpec, NoFromClause, SpecParseError

log = logging.getLogger(__name__)

HARDNESS_LEVELS = ("easy", "medium", "hard", "extra-hard")

# VQL chart keywords -> extract mark vocabulary. Two-word kinds first.
_VQL_KINDS = (
    ("STACKED BAR", "stacked-bar"),
    ("GROUPING LINE", "multi-line"),
    ("GROUPING SCATTER", "colored-scatter"),
    ("BAR", "bar"),
    ("PIE", "pie"),
    ("LINE", "line"),
    ("SCATTER", "scatter"),
    ("HISTOGRAM", "histogram"),
)

_QUOTES = {'"': '"', "'": "'", "`": "`", "[": "]"}


@dataclass(frozen=True)
class BenchCase:
    case_id: str
    db_id: str
    vql: str
    nl_queries: tuple[str, ...]
    hardness: str = "unknown"
    reference: VectorPair | None = None
    reference_chart: ChartExtract | None = None
    binning_note: str | None = None
    chart_kind: str = "unknown"
    table_name: str | None = None
    set_kind: str = "singleton"

    @property
    def first_query(self) -> str:
        return self.nl_queries[0] if self.nl_queries else ""


@dataclass
class FilterResult:
    cases: list[BenchCase]
    exclusions: dict[str, list[str]] = field(default_factory=dict)  # reason -> case ids
    total_seen: int = 0

    def excluded_count(self, reason: str) -> int:
        return len(self.exclusions.get(reason, []))

    @property
    def databases(self) -> set[str]:
        return {c.db_id for c in self.cases}


def _tokenize(sql: str) -> list[str]:
    return re.findall(r"[A-Za-z_][A-Za-z0-9_]*|\(|\)|[^\sA-Za-z_()]+", sql)


def extract_table_ref(vql: str) -> tuple[str, str]:
    """Table name after the (case-insensitive) FROM keyword, plus the chart
    kind named after the leading Visualize keyword."""
    if not vql or not vql.strip():
        raise NoFromClause("empty VQL")
    chart_kind = _parse_chart_kind(vql)
    match = re.search(r"\bFROM\b\s+", vql, flags=re.IGNORECASE)
    if not match:
        raise NoFromClause(f"no FROM clause in VQL: {vql[:80]!r}")
    rest = vql[match.end():].lstrip()
    if not rest:
        raise NoFromClause(f"FROM clause names no table: {vql[:80]!r}")
    if rest[0] in _QUOTES:
        closer = _QUOTES[rest[0]]
        end = rest.find(closer, 1)
        if end == -1:
            raise NoFromClause(f"unterminated quoted table name: {vql[:80]!r}")
        name = rest[1:end]
    else:
        m = re.match(r"[A-Za-z_][A-Za-z0-9_]*", rest)
        if not m:
            raise NoFromClause(f"FROM clause names no table: {vql[:80]!r}")
        name = m.group(0)
    return name, chart_kind


def _parse_chart_kind(vql: str) -> str:
    m = re.match(r"\s*VISUALIZE\s+(.*)", vql, flags=re.IGNORECASE | re.DOTALL)
    if not m:
        return "unknown"
    rest = m.group(1).upper()
    for keyword, kind in _VQL_KINDS:
        if rest.startswith(keyword + " ") or rest == keyword:
            return kind
    return "unknown"


def vql_has_join(vql: str) -> bool:
    return any(tok.upper() == "JOIN" for tok in _tokenize(vql))


def vql_has_foreign_where_subquery(vql: str) -> bool:
    """Shallow scan: a parenthesized SELECT inside WHERE whose FROM names a
    table other than the principal SELECT's."""
    try:
        principal, _ = extract_table_ref(vql)
    except NoFromClause:
        return False
    m = re.search(r"\bWHERE\b", vql, flags=re.IGNORECASE)
    if not m:
        return False
    clause = vql[m.end():]
    # Trim trailing clauses that sit at parenthesis depth 0.
    depth = 0
    end = len(clause)
    for match in re.finditer(r"\(|\)|\bGROUP\b|\bORDER\b|\bHAVING\b", clause,
                             flags=re.IGNORECASE):
        tok = match.group(0)
        if tok == "(":
            depth += 1
        elif tok == ")":
            depth -= 1
        elif depth == 0:
            end = match.start()
            break
    clause = clause[:end]
    for start in re.finditer(r"\(\s*SELECT\b", clause, flags=re.IGNORECASE):
        # Walk to the matching close paren so nested calls like AVG(x) do
        # not cut the subquery short.
        depth = 0
        span_end = len(clause)
        for i in range(start.start(), len(clause)):
            if clause[i] == "(":
                depth += 1
            elif clause[i] == ")":
                depth -= 1
                if depth == 0:
                    span_end = i
                    break
        inner = clause[start.end():span_end]
        from_m = re.search(r"\bFROM\b\s+([A-Za-z_][A-Za-z0-9_]*|\"[^\"]+\")", inner,
                           flags=re.IGNORECASE)
        if not from_m:
            continue
        table = from_m.group(1).strip('"')
        if table.lower() != principal.lower():
            return True
    return False


def _normalize_hardness(value: object) -> str:
    if not isinstance(value, str):
        return "unknown"
    v = value.strip().lower().replace("_", " ").replace("-", " ")
    if v in ("extra hard", "extrahard"):
        return "extra-hard"
    return v if v in ("easy", "medium", "hard") else "unknown"


def _flatten_mark(value: object) -> list:
    # Reference marks sometimes wrap the vector in a one-element list.
    if isinstance(value, list) and len(value) == 1 and isinstance(value[0], list):
        return value[0]
    if isinstance(value, list):
        return value
    return [value]


def _case_from_entry(case_id: str, entry: dict,
                     hardness_index: dict[str, str] | None) -> BenchCase:
    vis_query = entry.get("vis_query") or {}
    vql = entry.get("VQL") or entry.get("vql") or vis_query.get("VQL") or ""
    nl = entry.get("nl_queries") or []
    if isinstance(nl, str):
        nl = [nl]
    vis_obj = entry.get("vis_obj") or {}
    x_data = entry.get("x_data", vis_obj.get("x_data"))
    y_data = entry.get("y_data", vis_obj.get("y_data"))
    reference = None
    if x_data is not None and y_data is not None:
        xs = _flatten_mark(x_data)
        ys = _flatten_mark(y_data)
        if len(xs) == len(ys):
            try:
                reference = VectorPair(x=tuple(xs), y=tuple(float(v) for v in ys))
            except (TypeError, ValueError):
                reference = None
    hardness = _normalize_hardness(entry.get("hardness"))
    if hardness == "unknown" and hardness_index:
        hardness = _normalize_hardness(hardness_index.get(case_id))
    binning = entry.get("binning")
    table_name = None
    chart_kind = "unknown"
    try:
        table_name, chart_kind = extract_table_ref(vql)
    except NoFromClause:
        pass
    return BenchCase(
        case_id=case_id,
        db_id=str(entry.get("db_id", "")),
        vql=vql,
        nl_queries=tuple(str(q) for q in nl),
        hardness=hardness,
        reference=reference,
        binning_note=json.dumps(binning, ensure_ascii=False) if binning else None,
        chart_kind=chart_kind,
        table_name=table_name,
    )


def load_nvbench_with_audit(spec_file: str | Path,
                            hardness_index: dict[str, str] | None = None) -> FilterResult:
    """Load the JSON spec map and apply the four filters in order, logging
    every exclusion. Each filter only removes cases."""
    path = Path(spec_file)
    try:
        data = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SpecParseError(f"cannot parse benchmark spec {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SpecParseError(f"benchmark spec {path} is not a JSON object")

    result = FilterResult(cases=[], total_seen=len(data))
    for case_id, entry in data.items():
        if not isinstance(entry, dict):
            result.exclusions.setdefault("malformed", []).append(case_id)
            continue
        case = _case_from_entry(str(case_id), entry, hardness_index)
        if vql_has_join(case.vql):
            result.exclusions.setdefault("join-filter", []).append(case.case_id)
            log.info("excluded %s: join-filter", case.case_id)
            continue
        if vql_has_foreign_where_subquery(case.vql):
            result.exclusions.setdefault("subquery-filter", []).append(case.case_id)
            log.info("excluded %s: subquery-filter", case.case_id)
            continue
        if case.chart_kind != "bar":
            result.exclusions.setdefault("chart-filter", []).append(case.case_id)
            log.info("excluded %s: chart-filter (%s)", case.case_id, case.chart_kind)
            continue
        # Filter 4 keeps only the first query; the rest stay on the case as
        # provenance but are never evaluated.
        result.cases.append(case)
    return result


def load_and_filter_nvbench(spec_file: str | Path,
                            hardness_index: dict[str, str] | None = None) -> list[BenchCase]:
    return load_nvbench_with_audit(spec_file, hardness_index).cases


def load_hardness_index(path: str | Path) -> dict[str, str]:
    data = json.loads(Path(path).read_text("utf-8"))
    return {str(k): _normalize_hardness(v) for k, v in data.items()}


def extract_bench_vectors(case: BenchCase) -> VectorPair:
    """Reference vectors in specification order; missing or unequal-length
    marks are benchmark damage, not a system failure."""
    if case.reference is None:
        raise MalformedSpec(
            f"case {case.case_id}: x_data/y_data marks missing or unequal length"
        )
    return case.reference


def audit_reference(case: BenchCase, db_path: str | Path) -> dict:
    """Cross-check the spec's vectors by running its own SQL directly.

    Disagreement is recorded, never raised: both values are retained so a
    human can audit benchmark damage."""
    sql = re.sub(r"^\s*VISUALIZE\s+(STACKED\s+|GROUPING\s+)?[A-Za-z]+\s+", "",
                 case.vql, flags=re.IGNORECASE)
    entry: dict = {"case_id": case.case_id, "sql": sql, "agrees": None}
    try:
        conn = sqlite3.connect(f"file:{Path(db_path)}?mode=ro", uri=True)
        try:
            rows = conn.execute(sql).fetchall()
        finally:
            conn.close()
    except sqlite3.Error as exc:
        entry["sql_error"] = str(exc)
        return entry
    sql_pair = VectorPair(
        x=tuple(r[0] for r in rows),
        y=tuple(float(r[1]) if r[1] is not None else 0.0 for r in rows),
    ) if all(len(r) >= 2 for r in rows) else None
    entry["sql_vectors"] = None if sql_pair is None else {
        "x": list(sql_pair.x), "y": list(sql_pair.y),
    }
    if case.reference is not None and sql_pair is not None:
        entry["spec_vectors"] = {"x": list(case.reference.x), "y": list(case.reference.y)}
        entry["agrees"] = (
            sorted(map(str, sql_pair.x)) == sorted(map(str, case.reference.x))
            and sorted(sql_pair.y) == sorted(case.reference.y)
        )
    return entry


# -- utterance corpus ---------------------------------------------------------

def load_nlv_corpus(
    corpus_file: str | Path,
    references_file: str | Path,
    sequential_separator: str = "|",
) -> tuple[list[BenchCase], dict[str, list[str]]]:
    """Load utterance rows (dataset, chart id, utterance, set kind) plus the
    per-chart reference extracts. Sequential sets are joined into one query.
    Queries tied to empty reference charts are excluded at load."""
    refs_raw = json.loads(Path(references_file).read_text("utf-8"))
    references = {cid: chart_from_wire(obj) for cid, obj in refs_raw.items()}

    cases: list[BenchCase] = []
    audit: dict[str, list[str]] = {}
    with open(corpus_file, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"dataset", "chart_id", "utterance", "set_kind"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise SpecParseError(
                f"utterance corpus must have columns {sorted(required)}"
            )
        for i, row in enumerate(reader):
            case_id = row.get("case_id") or f"{row['chart_id']}@{i}"
            chart_id = row["chart_id"]
            reference = references.get(chart_id)
            if reference is None:
                audit.setdefault("missing-reference", []).append(case_id)
                continue
            if not reference.series:
                audit.setdefault("empty-reference", []).append(case_id)
                continue
            utterance = row["utterance"]
            if row["set_kind"].strip().lower() == "sequential":
                pieces = [p.strip() for p in utterance.split(sequential_separator)]
                utterance = " ".join(p for p in pieces if p)
                set_kind = "sequential"
            else:
                set_kind = "singleton"
            cases.append(BenchCase(
                case_id=case_id,
                db_id=row["dataset"],
                vql="",
                nl_queries=(utterance,),
                hardness="unknown",
                reference_chart=reference,
                chart_kind=reference.mark_kind,
                table_name=row["dataset"],
                set_kind=set_kind,
            ))
    return cases, audit
