/**
 * Metrics, enhancement, and simulation panels. All numbers come from the
 * service; the client never evaluates rules itself.
 */

import type { SessionMetrics, SimulatedCase, SplitAccuracy } from "./api";

function pct(v: number | null): string {
  return v === null ? "—" : `${(100 * v).toFixed(1)}%`;
}

/** Per-tree accuracy block shown under each canvas. */
export function renderMetricsBlock(
  container: HTMLElement,
  byDist: Record<string, SplitAccuracy>,
): void {
  container.textContent = "";
  const table = document.createElement("table");
  table.className = "metrics";
  const head = table.insertRow();
  for (const h of ["distribution", "train", "test"]) {
    const cell = document.createElement("th");
    cell.textContent = h;
    head.appendChild(cell);
  }
  for (const [dist, acc] of Object.entries(byDist)) {
    const row = table.insertRow();
    row.insertCell().textContent = dist;
    row.insertCell().textContent = pct(acc.train);
    row.insertCell().textContent = pct(acc.test);
  }
  container.appendChild(table);
}

export function renderSessionSummary(
  container: HTMLElement,
  metrics: SessionMetrics,
): void {
  container.textContent = "";
  const dl = document.createElement("dl");
  dl.className = "session-summary";
  const entries: [string, string][] = [
    ["faithfulness (AI tree vs network)", pct(metrics.faithfulness)],
    ["TED, AI tree → guideline", String(metrics.ted_ai_to_guideline)],
    ["TED, AI tree → your rules", String(metrics.ted_ai_to_user)],
  ];
  for (const [term, value] of entries) {
    const dt = document.createElement("dt");
    dt.textContent = term;
    const dd = document.createElement("dd");
    dd.textContent = value;
    dl.appendChild(dt);
    dl.appendChild(dd);
  }
  container.appendChild(dl);
}

export interface SliderValues {
  prediction_similarity: number;
  structure_similarity: number;
}

/** The two 0–100 similarity sliders of the enhancement panel. */
export function renderSliders(
  container: HTMLElement,
  initial: SliderValues,
  onChange: (values: SliderValues) => void,
): void {
  container.textContent = "";
  const values = { ...initial };
  const make = (key: keyof SliderValues, label: string) => {
    const wrap = document.createElement("label");
    wrap.className = "slider";
    const text = document.createElement("span");
    text.textContent = `${label}: ${values[key]}`;
    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = "100";
    input.value = String(values[key]);
    input.addEventListener("input", () => {
      values[key] = Number(input.value);
      text.textContent = `${label}: ${values[key]}`;
      onChange({ ...values });
    });
    wrap.appendChild(text);
    wrap.appendChild(input);
    container.appendChild(wrap);
  };
  make("prediction_similarity", "Prediction Similarity");
  make("structure_similarity", "Structure Similarity");
}

/**
 * Simulation panel: the user records their guess of the AI's label first,
 * then reveals the AI prediction and the ground truth.
 */
export function renderSimulation(
  container: HTMLElement,
  cases: SimulatedCase[],
  classNames: string[],
): void {
  container.textContent = "";
  for (const c of cases) {
    const card = document.createElement("div");
    card.className = "sim-case";
    card.dataset.caseId = String(c.id);
    const facts = document.createElement("dl");
    facts.className = "sim-values";
    for (const [name, value] of Object.entries(c.values)) {
      const dt = document.createElement("dt");
      dt.textContent = name;
      const dd = document.createElement("dd");
      dd.textContent = String(value);
      facts.appendChild(dt);
      facts.appendChild(dd);
    }
    card.appendChild(facts);

    const guessRow = document.createElement("div");
    guessRow.className = "sim-guess";
    const prompt = document.createElement("span");
    prompt.textContent = "Your estimate of the AI's prediction: ";
    guessRow.appendChild(prompt);
    const reveal = document.createElement("div");
    reveal.className = "sim-reveal";
    reveal.hidden = true;
    reveal.textContent = `AI predicted ${c.ai_prediction}; actual ${c.ground_truth}`;
    for (const name of classNames) {
      const btn = document.createElement("button");
      btn.className = "sim-guess-btn";
      btn.textContent = name;
      btn.addEventListener("click", () => {
        // Estimates are display-only; nothing is sent to the server.
        reveal.hidden = false;
        reveal.dataset.userGuess = name;
        reveal.dataset.correct = String(name === c.ai_prediction);
        guessRow.querySelectorAll("button").forEach((b) => (b.disabled = true));
      });
      guessRow.appendChild(btn);
    }
    card.appendChild(guessRow);
    card.appendChild(reveal);
    container.appendChild(card);
  }
}
