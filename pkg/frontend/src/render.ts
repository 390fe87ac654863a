// DOM rendering: one section per turn, one panel per selected model.
// Charts are server-rendered images when available; panels always expose
// the generated script and the extracted vectors in an expandable block.

import { ChartData, ModelResultData, TurnData } from "./api.js";
import { SessionView } from "./state.js";

export interface RenderOptions {
  imageUrl: (ref: string) => string;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

function vectorsTable(doc: Document, chart: ChartData): HTMLElement {
  const table = el(doc, "table", { class: "vectors", "data-testid": "vectors" });
  for (const series of chart.series) {
    const header = el(doc, "tr");
    header.appendChild(el(doc, "th", {}, series.label ?? ""));
    header.appendChild(el(doc, "th", {}, "x"));
    header.appendChild(el(doc, "th", {}, "y"));
    table.appendChild(header);
    series.x.forEach((x, i) => {
      const row = el(doc, "tr");
      row.appendChild(el(doc, "td", {}, ""));
      row.appendChild(el(doc, "td", {}, String(x)));
      row.appendChild(el(doc, "td", {}, String(series.y[i])));
      table.appendChild(row);
    });
  }
  return table;
}

export function renderPanel(
  doc: Document,
  modelName: string,
  result: ModelResultData | undefined,
  options: RenderOptions,
): HTMLElement {
  const panel = el(doc, "article", {
    class: "panel",
    "data-testid": "panel",
    "data-model": modelName,
  });
  panel.appendChild(el(doc, "h3", {}, modelName));

  if (!result) {
    panel.appendChild(el(doc, "p", { class: "loading" }, "waiting…"));
    return panel;
  }
  if (result.error) {
    const badgeKind = result.error.split(":")[0];
    panel.appendChild(
      el(doc, "span", { class: "error-badge", "data-testid": "error-badge" }, badgeKind),
    );
    panel.appendChild(el(doc, "pre", { class: "error-text" }, result.error));
    return panel;
  }

  if (result.image_ref) {
    panel.appendChild(
      el(doc, "img", {
        class: "chart-image",
        "data-testid": "chart-image",
        src: options.imageUrl(result.image_ref),
        alt: `chart from ${modelName}`,
      }),
    );
  } else if (result.chart) {
    panel.appendChild(vectorsTable(doc, result.chart));
  }

  const details = el(doc, "details", { "data-testid": "panel-details" });
  details.appendChild(el(doc, "summary", {}, "script and extracted data"));
  details.appendChild(el(doc, "pre", { class: "script" }, result.script));
  if (result.chart) {
    details.appendChild(el(doc, "p", {}, `mark kind: ${result.chart.mark_kind}`));
    if (result.image_ref) details.appendChild(vectorsTable(doc, result.chart));
  }
  panel.appendChild(details);
  return panel;
}

export function renderTurn(
  doc: Document,
  turn: TurnData,
  modelNames: string[],
  options: RenderOptions,
): HTMLElement {
  const section = el(doc, "section", { class: "turn", "data-testid": "turn" });
  const query = el(doc, "p", { class: "query", "data-testid": "query" });
  query.textContent = turn.effective_query;
  section.appendChild(query);

  const panels = el(doc, "div", { class: "panels" });
  for (const name of modelNames) {
    panels.appendChild(renderPanel(doc, name, turn.results[name], options));
  }
  section.appendChild(panels);
  return section;
}

/** Full re-render: turn history reads top to bottom, newest last. */
export function renderHistory(
  doc: Document,
  container: HTMLElement,
  view: SessionView,
  options: RenderOptions,
): void {
  container.textContent = "";
  if (!view.session) return;
  const modelNames = view.session.models.map((m) => m.model_name);
  for (const turn of view.turns) {
    container.appendChild(renderTurn(doc, turn, modelNames, options));
  }
  if (view.pending) {
    container.appendChild(
      el(doc, "p", { class: "pending", "data-testid": "pending" }, "running…"),
    );
  }
  if (view.lastError) {
    container.appendChild(
      el(doc, "p", { class: "inline-error", "data-testid": "inline-error" },
        view.lastError),
    );
  }
}
