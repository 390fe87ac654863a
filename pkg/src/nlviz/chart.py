"""Chart extracts: what a rendered figure actually plotted.

The wire JSON shape here is the contract between this package and the
out-of-process sandbox runner; the runner emits it, this module parses it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .compare import VectorPair, XValue

MARK_KINDS = (
    "bar", "grouped-bar", "stacked-bar", "histogram", "line", "multi-line",
    "scatter", "colored-scatter", "faceted-scatter", "pie", "unknown",
)


@dataclass(frozen=True)
class Series:
    x: tuple[XValue, ...]
    y: tuple[float, ...]
    label: str | None = None

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ValueError(f"series |x| = {len(self.x)} but |y| = {len(self.y)}")


@dataclass(frozen=True)
class ChartExtract:
    mark_kind: str
    series: tuple[Series, ...]
    axis_labels: dict = field(default_factory=dict)
    title: str | None = None

    def flatten(self) -> VectorPair:
        """Concatenate series in extraction order into one flat pair."""
        xs: list[XValue] = []
        ys: list[float] = []
        for s in self.series:
            xs.extend(s.x)
            ys.extend(s.y)
        return VectorPair(x=tuple(xs), y=tuple(ys))


def chart_from_wire(data: dict) -> ChartExtract:
    series = tuple(
        Series(x=tuple(s["x"]), y=tuple(float(v) for v in s["y"]), label=s.get("label"))
        for s in data.get("series", [])
    )
    return ChartExtract(
        mark_kind=data.get("mark_kind", "unknown"),
        series=series,
        axis_labels=data.get("axis_labels", {}),
        title=data.get("title"),
    )


def chart_to_wire(chart: ChartExtract) -> dict:
    return {
        "mark_kind": chart.mark_kind,
        "series": [
            {"label": s.label, "x": list(s.x), "y": list(s.y)} for s in chart.series
        ],
        "axis_labels": dict(chart.axis_labels),
        "title": chart.title,
    }
