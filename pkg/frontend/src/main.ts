// Browser bootstrap: dataset picker, up-to-three model picker, a single
// query box above the turn history, and inline validation for empty input.

import { ApiClient } from "./api.js";
import { renderHistory } from "./render.js";
import { SessionController } from "./state.js";

const MODEL_CHOICES = [
  "openai:code-davinci-002:completion",
  "openai:text-davinci-003:completion",
  "openai:gpt-3.5-turbo:chat",
];

export async function boot(doc: Document, baseUrl = ""): Promise<void> {
  const api = new ApiClient(baseUrl);
  const controller = new SessionController(api);

  const root = doc.getElementById("app");
  if (!root) throw new Error("missing #app container");

  const setup = doc.createElement("form");
  setup.id = "setup";
  const datasetSelect = doc.createElement("select");
  datasetSelect.id = "dataset";
  const { datasets } = await api.listDatasets();
  for (const name of datasets) {
    const option = doc.createElement("option");
    option.value = name;
    option.textContent = name;
    datasetSelect.appendChild(option);
  }
  setup.appendChild(datasetSelect);

  const modelBoxes: HTMLInputElement[] = [];
  for (const spec of MODEL_CHOICES) {
    const label = doc.createElement("label");
    const box = doc.createElement("input");
    box.type = "checkbox";
    box.value = spec;
    box.checked = true;
    modelBoxes.push(box);
    label.appendChild(box);
    label.appendChild(doc.createTextNode(spec.split(":")[1]));
    setup.appendChild(label);
  }
  const startButton = doc.createElement("button");
  startButton.type = "submit";
  startButton.textContent = "Start session";
  setup.appendChild(startButton);
  root.appendChild(setup);

  const queryForm = doc.createElement("form");
  queryForm.id = "query-form";
  queryForm.hidden = true;
  const queryBox = doc.createElement("input");
  queryBox.id = "query-box";
  queryBox.setAttribute("placeholder", "Describe the chart you want…");
  const sendButton = doc.createElement("button");
  sendButton.type = "submit";
  sendButton.textContent = "Send";
  const validation = doc.createElement("span");
  validation.id = "validation";
  queryForm.appendChild(queryBox);
  queryForm.appendChild(sendButton);
  queryForm.appendChild(validation);
  root.appendChild(queryForm);

  const history = doc.createElement("div");
  history.id = "history";
  root.appendChild(history);

  const options = { imageUrl: (ref: string) => api.imageUrl(ref) };
  controller.onChange((view) => {
    renderHistory(doc, history, view, options);
    if (view.session && doc.defaultView) {
      doc.defaultView.location.hash = view.session.session_id;
    }
  });

  // Reloading at #<session-id> reconstructs the history from the API.
  const existing = doc.defaultView?.location.hash.replace(/^#/, "");
  if (existing) {
    await controller.restore(existing).then(() => {
      setup.hidden = true;
      queryForm.hidden = false;
    }).catch(() => undefined);
  }

  setup.addEventListener("submit", (event) => {
    event.preventDefault();
    const models = modelBoxes.filter((b) => b.checked).map((b) => b.value);
    if (models.length === 0 || models.length > 3) {
      validation.textContent = "pick one to three models";
      return;
    }
    void controller.start(datasetSelect.value, models).then(() => {
      setup.hidden = true;
      queryForm.hidden = false;
    });
  });

  queryForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = queryBox.value;
    if (!text.trim()) {
      validation.textContent = "query must not be empty";
      return;
    }
    validation.textContent = "";
    queryBox.value = "";
    void controller.submit(text).catch(() => undefined);
  });
}

declare global {
  interface Window {
    nlvizBoot?: typeof boot;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.nlvizBoot = boot;
  void boot(document);
}
