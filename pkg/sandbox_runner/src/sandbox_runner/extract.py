"""Figure introspection: recover the plotted data vectors from live artists.

Mark-kind precedence when mixed artist types exist: bars > lines >
scatter > pie. Dates serialize as ISO-8601; non-finite y cells are dropped
with a note on stderr so date/time grouping quirks stay observable.
"""

from __future__ import annotations

import math
import sys
from datetime import date, datetime

import numpy as np
from matplotlib.container import BarContainer
from matplotlib.patches import Wedge


class NoChartDrawn(Exception):
    pass


def _to_x_value(value):
    if isinstance(value, (datetime, date)):
        return value.isoformat()
    if isinstance(value, np.datetime64):
        return np.datetime_as_string(value, unit="s")
    if isinstance(value, (np.integer, np.floating)):
        return float(value)
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    return str(value)


def _finite_series(xs, ys, context: str):
    out_x, out_y = [], []
    dropped = 0
    for x, y in zip(xs, ys):
        try:
            fy = float(y)
        except (TypeError, ValueError):
            dropped += 1
            continue
        if not math.isfinite(fy):
            dropped += 1
            continue
        out_x.append(_to_x_value(x))
        out_y.append(fy)
    if dropped:
        print(f"extract: dropped {dropped} non-finite cells in {context}",
              file=sys.stderr)
    return out_x, out_y


def _axis_is_categorical(axis) -> bool:
    # Category axes and pandas bar plots pin their ticks; numeric axes let
    # an auto locator choose them.
    return type(axis.get_major_locator()).__name__ in (
        "FixedLocator", "StrCategoryLocator",
    )


def _tick_label_map(axis) -> dict[float, str]:
    if not _axis_is_categorical(axis):
        return {}
    labels = {}
    for pos, text in zip(axis.get_ticklocs(), axis.get_ticklabels()):
        label = text.get_text()
        if label:
            labels[round(float(pos), 9)] = label
    return labels


def _label_for(center: float, ticks: dict[float, str]):
    """Nearest pinned tick label within half a slot; floats otherwise."""
    best = None
    best_dist = 0.5
    for pos, label in ticks.items():
        dist = abs(pos - float(center))
        if dist < best_dist:
            best, best_dist = label, dist
    return best if best is not None else float(center)


def _bars_contiguous(rects) -> bool:
    if len(rects) < 2:
        return False
    ordered = sorted(rects, key=lambda r: r.get_x())
    for a, b in zip(ordered, ordered[1:]):
        edge = a.get_x() + a.get_width()
        span = max(abs(a.get_width()), 1e-12)
        if abs(edge - b.get_x()) > 1e-6 * max(1.0, abs(edge) / span) * span:
            return False
    return True


def _extract_bar_family(ax, containers):
    ticks = _tick_label_map(ax.xaxis)
    h_ticks = _tick_label_map(ax.yaxis)
    series = []
    stacked = False
    all_centers = []
    for container in containers:
        rects = list(container)
        if not rects:
            continue
        horizontal = getattr(container, "orientation", "vertical") == "horizontal"
        xs, ys = [], []
        for rect in rects:
            if horizontal:
                center = rect.get_y() + rect.get_height() / 2.0
                value = rect.get_width()
                base = rect.get_x()
                xs.append(_label_for(center, h_ticks))
            else:
                center = rect.get_x() + rect.get_width() / 2.0
                value = rect.get_height()
                base = rect.get_y()
                xs.append(_label_for(center, ticks))
            ys.append(value)
            if abs(base) > 1e-12:
                stacked = True
            all_centers.append(round(center, 9))
        label = container.get_label()
        if isinstance(label, str) and label.startswith("_"):
            label = None
        sx, sy = _finite_series(xs, ys, "bar container")
        series.append({"label": label, "x": sx, "y": sy})

    if len(series) == 1:
        rects = list(containers[0])
        numeric_x = not _axis_is_categorical(ax.xaxis)
        if numeric_x and _bars_contiguous(rects):
            centers = [r.get_x() + r.get_width() / 2.0 for r in
                       sorted(rects, key=lambda r: r.get_x())]
            heights = [r.get_height() for r in sorted(rects, key=lambda r: r.get_x())]
            sx, sy = _finite_series(centers, heights, "histogram")
            return "histogram", [{"label": series[0]["label"], "x": sx, "y": sy}]
        return "bar", series

    if stacked:
        return "stacked-bar", series
    # Distinct per-container center positions mean side-by-side groups.
    per_container_centers = [
        {round(r.get_x() + r.get_width() / 2.0, 9) for r in c} for c in containers if len(c)
    ]
    if len(per_container_centers) > 1 and any(
        a != per_container_centers[0] for a in per_container_centers[1:]
    ):
        return "grouped-bar", series
    return "grouped-bar", series


def _extract_lines(axes_list):
    series = []
    for ax in axes_list:
        for line in ax.get_lines():
            xs = line.get_xdata(orig=True)
            ys = line.get_ydata(orig=True)
            if len(xs) == 0:
                continue
            label = line.get_label()
            if isinstance(label, str) and label.startswith("_"):
                label = None
            sx, sy = _finite_series(xs, ys, "line")
            if sx:
                series.append({"label": label, "x": sx, "y": sy})
    if not series:
        return None
    return ("multi-line" if len(series) > 1 else "line"), series


def _extract_scatter(axes_list):
    per_axes = []
    for ax in axes_list:
        ticks = _tick_label_map(ax.xaxis)
        collections = [c for c in ax.collections if hasattr(c, "get_offsets")]
        points = []
        colors = []
        for coll in collections:
            offsets = np.asarray(coll.get_offsets())
            if offsets.size == 0:
                continue
            face = np.asarray(coll.get_facecolors())
            for i, (x, y) in enumerate(offsets):
                points.append((_label_for(x, ticks) if ticks else float(x), float(y)))
                if len(face) == len(offsets):
                    colors.append(tuple(np.round(face[i], 6)))
                elif len(face):
                    colors.append(tuple(np.round(face[0], 6)))
                else:
                    colors.append(None)
        if points:
            per_axes.append((ax, points, colors))

    if not per_axes:
        return None
    if len(per_axes) > 1:
        series = []
        for ax, points, _ in per_axes:
            sx, sy = _finite_series([p[0] for p in points], [p[1] for p in points],
                                    "facet scatter")
            series.append({"label": ax.get_title() or None, "x": sx, "y": sy})
        return "faceted-scatter", series

    _, points, colors = per_axes[0]
    distinct = [c for c in dict.fromkeys(colors) if c is not None]
    if len(distinct) > 1:
        series = []
        for color in distinct:
            group = [p for p, c in zip(points, colors) if c == color]
            sx, sy = _finite_series([p[0] for p in group], [p[1] for p in group],
                                    "color group")
            series.append({"label": None, "x": sx, "y": sy})
        return "colored-scatter", series
    sx, sy = _finite_series([p[0] for p in points], [p[1] for p in points], "scatter")
    return "scatter", [{"label": None, "x": sx, "y": sy}]


def _extract_pie(ax):
    wedges = [p for p in ax.patches if isinstance(p, Wedge)]
    if not wedges:
        return None
    labels = []
    values = []
    texts = [t.get_text() for t in ax.texts if t.get_text()]
    for i, wedge in enumerate(wedges):
        label = wedge.get_label()
        if not label or label.startswith("_"):
            label = texts[i] if i < len(texts) else f"wedge {i}"
        labels.append(label)
        # Percent of the full circle; 10dp rounding strips angle float noise.
        values.append(round((wedge.theta2 - wedge.theta1) / 360.0 * 100.0, 10))
    sx, sy = _finite_series(labels, values, "pie")
    return "pie", [{"label": None, "x": sx, "y": sy}]


def extract_chart(fig) -> dict:
    """Walk the first figure's artists and build the wire chart object."""
    fig.canvas.draw()  # materialize tick labels
    axes_list = [ax for ax in fig.axes if ax.get_visible()]
    if not axes_list:
        raise NoChartDrawn("figure has no axes")

    containers = []
    for ax in axes_list:
        containers.extend(c for c in ax.containers if isinstance(c, BarContainer))

    mark_kind = None
    series = None
    if containers:
        bar_ax = next(ax for ax in axes_list
                      if any(isinstance(c, BarContainer) for c in ax.containers))
        mark_kind, series = _extract_bar_family(
            bar_ax, [c for c in bar_ax.containers if isinstance(c, BarContainer)]
        )
    if series is None:
        result = _extract_lines(axes_list)
        if result:
            mark_kind, series = result
    if series is None:
        result = _extract_scatter(axes_list)
        if result:
            mark_kind, series = result
    if series is None:
        result = _extract_pie(axes_list[0])
        if result:
            mark_kind, series = result
    if series is None or not any(s["x"] for s in series):
        raise NoChartDrawn("no bar, line, scatter, or pie artists found")

    first = axes_list[0]
    return {
        "mark_kind": mark_kind,
        "series": series,
        "axis_labels": {
            "x": first.get_xlabel() or None,
            "y": first.get_ylabel() or None,
        },
        "title": first.get_title() or (fig._suptitle.get_text() if fig._suptitle else None),
    }
