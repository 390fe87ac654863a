"""Outcome classification and report aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

RESULTS = ("Match", "Mismatch", "Error")

ERROR_REASONS = (
    "provider-failure", "truncated-script", "syntax", "runtime", "timeout",
    "extraction-failure", "load-failure",
)
TAXONOMY_LABELS = (
    "benchmark-inaccuracy", "methodology-limitation", "ambiguity",
    "query-misinterpretation",
)


@dataclass(frozen=True)
class Outcome:
    case_id: str
    result: str
    reason: str | None = None  # Error reasons above, or vector-mismatch
    taxonomy: str | None = None  # assigned only by human adjudication
    hardness: str = "unknown"
    db_id: str = ""
    chart_kind: str = "unknown"
    stage: int | None = None
    detail: str = ""
    infrastructure: bool = False
    adjudication_candidate: bool = False

    def __post_init__(self) -> None:
        if self.result not in RESULTS:
            raise ValueError(f"unknown result {self.result!r}")
        if self.result == "Error" and self.reason not in ERROR_REASONS:
            raise ValueError(f"Error outcome needs an execution/provider reason, "
                             f"got {self.reason!r}")
        if self.result == "Mismatch" and self.reason != "vector-mismatch":
            raise ValueError("Mismatch outcome must carry reason=vector-mismatch")
        if self.taxonomy is not None and self.taxonomy not in TAXONOMY_LABELS:
            raise ValueError(f"unknown taxonomy label {self.taxonomy!r}")


def _tally(outcomes: list[Outcome]) -> dict:
    counts = {r: 0 for r in RESULTS}
    for o in outcomes:
        counts[o.result] += 1
    evaluated = len(outcomes)
    counts["evaluated"] = evaluated
    counts["match_rate"] = counts["Match"] / evaluated if evaluated else 0.0
    return counts


@dataclass
class EvaluationReport:
    outcomes: list[Outcome] = field(default_factory=list)
    skipped: dict[str, list[str]] = field(default_factory=dict)  # audit, not evaluated
    stages: list[dict] | None = None

    @property
    def totals(self) -> dict:
        return _tally(self.outcomes)

    def _group(self, key) -> dict[str, dict]:
        groups: dict[str, list[Outcome]] = {}
        for o in self.outcomes:
            groups.setdefault(key(o), []).append(o)
        return {k: _tally(v) for k, v in sorted(groups.items())}

    def by_hardness(self) -> dict[str, dict]:
        return self._group(lambda o: o.hardness)

    def by_database(self) -> dict[str, dict]:
        return self._group(lambda o: o.db_id)

    def by_chart_kind(self) -> dict[str, dict]:
        return self._group(lambda o: o.chart_kind)

    def by_stage(self) -> dict[str, dict]:
        return self._group(lambda o: str(o.stage) if o.stage is not None else "-")

    def top_mismatched_databases(self, n: int = 10) -> list[tuple[str, int]]:
        counts: dict[str, int] = {}
        for o in self.outcomes:
            if o.result == "Mismatch":
                counts[o.db_id] = counts.get(o.db_id, 0) + 1
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:n]

    def adjudication_queue(self) -> list[Outcome]:
        return [o for o in self.outcomes if o.adjudication_candidate]

    def to_dict(self) -> dict:
        return {
            "totals": self.totals,
            "by_hardness": self.by_hardness(),
            "by_database": self.by_database(),
            "by_chart_kind": self.by_chart_kind(),
            "by_stage": self.by_stage(),
            "stages": self.stages,
            "top_mismatched_databases": [
                {"db_id": d, "mismatches": c} for d, c in self.top_mismatched_databases()
            ],
            "skipped": self.skipped,
            "outcomes": [
                {
                    "case_id": o.case_id,
                    "result": o.result,
                    "reason": o.reason,
                    "taxonomy": o.taxonomy,
                    "hardness": o.hardness,
                    "db_id": o.db_id,
                    "chart_kind": o.chart_kind,
                    "stage": o.stage,
                    "detail": o.detail,
                    "infrastructure": o.infrastructure,
                    "adjudication_candidate": o.adjudication_candidate,
                }
                for o in self.outcomes
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "EvaluationReport":
        outcomes = [
            Outcome(
                case_id=o["case_id"],
                result=o["result"],
                reason=o.get("reason"),
                taxonomy=o.get("taxonomy"),
                hardness=o.get("hardness", "unknown"),
                db_id=o.get("db_id", ""),
                chart_kind=o.get("chart_kind", "unknown"),
                stage=o.get("stage"),
                detail=o.get("detail", ""),
                infrastructure=o.get("infrastructure", False),
                adjudication_candidate=o.get("adjudication_candidate", False),
            )
            for o in data.get("outcomes", [])
        ]
        return cls(outcomes=outcomes, skipped=data.get("skipped", {}),
                   stages=data.get("stages"))

    def render_text(self, by: str = "difficulty", top: int = 10) -> str:
        titles = {
            "difficulty": ("By difficulty", self.by_hardness()),
            "database": ("By database", self.by_database()),
            "chart": ("By chart kind", self.by_chart_kind()),
            "stage": ("By stage", self.by_stage()),
        }
        if by not in titles:
            raise ValueError(f"unknown grouping {by!r}")
        title, groups = titles[by]
        lines = []
        t = self.totals
        lines.append(f"Evaluated {t['evaluated']} cases: "
                     f"{t['Match']} Match, {t['Mismatch']} Mismatch, {t['Error']} Error "
                     f"({t['match_rate']:.1%} matched)")
        lines.append("")
        lines.append(title)
        header = f"{'group':<24}{'match':>8}{'mismatch':>10}{'error':>8}{'rate':>9}"
        lines.append(header)
        lines.append("-" * len(header))
        items = list(groups.items())
        if by == "database":
            items.sort(key=lambda kv: (-kv[1]["Mismatch"], kv[0]))
            items = items[:top]
        for name, tally in items:
            lines.append(
                f"{name:<24}{tally['Match']:>8}{tally['Mismatch']:>10}"
                f"{tally['Error']:>8}{tally['match_rate']:>9.1%}"
            )
        if self.skipped:
            lines.append("")
            for reason, ids in sorted(self.skipped.items()):
                lines.append(f"skipped ({reason}): {len(ids)}")
        return "\n".join(lines)


# -- manual adjudication ------------------------------------------------------

def write_review_report(report: EvaluationReport, path: str | Path) -> int:
    """Export adjudication candidates for human review."""
    queue = [
        {
            "case_id": o.case_id,
            "result": o.result,
            "chart_kind": o.chart_kind,
            "detail": o.detail,
            "verdict": "",
            "taxonomy": "",
            "note": "",
        }
        for o in report.adjudication_queue()
    ]
    Path(path).write_text(
        json.dumps(queue, ensure_ascii=False, indent=2), encoding="utf-8"
    )
    return len(queue)


def load_verdicts(path: str | Path) -> dict[str, dict]:
    data = json.loads(Path(path).read_text("utf-8"))
    verdicts = {}
    for row in data:
        verdict = row.get("verdict", "")
        if verdict not in ("accept", "reject"):
            continue
        verdicts[row["case_id"]] = {
            "verdict": verdict,
            "taxonomy": row.get("taxonomy") or None,
            "note": row.get("note", ""),
        }
    return verdicts


def merge_verdicts(report: EvaluationReport, verdicts: dict[str, dict]) -> EvaluationReport:
    """Accepted candidates become Matches; taxonomy labels attach either way."""
    merged = []
    for o in report.outcomes:
        v = verdicts.get(o.case_id)
        if v is None or not o.adjudication_candidate:
            merged.append(o)
            continue
        taxonomy = v["taxonomy"] if v["taxonomy"] in TAXONOMY_LABELS else None
        if v["verdict"] == "accept":
            merged.append(replace(
                o, result="Match", reason=None, taxonomy=taxonomy,
                adjudication_candidate=False,
                detail=(o.detail + " | accepted by adjudication").strip(" |"),
            ))
        else:
            merged.append(replace(o, taxonomy=taxonomy))
    return EvaluationReport(outcomes=merged, skipped=report.skipped, stages=report.stages)
