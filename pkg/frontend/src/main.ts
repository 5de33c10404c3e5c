/**
 * Application wiring: session bootstrap, dual canvases (user editable, AI
 * read-only), enhancement panel, edit history with selective acceptance,
 * metrics, and simulation.
 */

import { ApiError, Client, type EditOpJson, type SessionMetrics } from "./api";
import { RuleCanvas, renderPalette } from "./canvas";
import { renderEditOps } from "./history";
import {
  renderMetricsBlock,
  renderSessionSummary,
  renderSimulation,
  renderSliders,
  type SliderValues,
} from "./panels";
import {
  type Attribute,
  type RuleNode,
  constraintIds,
  parse,
  serialize,
  validate,
} from "./tree";
import "./styles.css";

interface AppState {
  client: Client;
  sessionId: string;
  attributes: Attribute[];
  classNames: string[];
  sliders: SliderValues;
  lastScript: EditOpJson[];
  selectedOps: number[];
  busy: boolean;
}

function el<T extends HTMLElement = HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string, isError = false): void {
  const status = el("status");
  status.textContent = text;
  status.classList.toggle("error", isError);
}

async function startApp(): Promise<void> {
  const setup = el("setup");
  const workspace = el("workspace");
  el("connect").addEventListener("click", async () => {
    const client = new Client(
      (el<HTMLInputElement>("base-url").value || "").replace(/\/$/, ""),
    );
    let schema: Attribute[];
    try {
      schema = JSON.parse(el<HTMLTextAreaElement>("schema-json").value);
    } catch (e) {
      setStatus(`schema JSON: ${(e as Error).message}`, true);
      return;
    }
    try {
      setStatus("ingesting dataset…");
      const dataset = await client.createDataset({
        csv: el<HTMLTextAreaElement>("csv-text").value,
        schema,
        label_column: el<HTMLInputElement>("label-column").value,
      });
      setStatus("creating session (trains the pretrained network)…");
      const session = await client.createSession({
        dataset: dataset.id,
        split: {
          attribute: el<HTMLInputElement>("split-attr").value,
          comparator: "<",
          raw_threshold: Number(el<HTMLInputElement>("split-threshold").value),
        },
        seed: 0,
      });
      setup.hidden = true;
      workspace.hidden = false;
      runWorkspace(
        {
          client,
          sessionId: session.id,
          attributes: schema,
          classNames: dataset.class_names,
          sliders: { prediction_similarity: 50, structure_similarity: 50 },
          lastScript: [],
          selectedOps: [],
          busy: false,
        },
        session.rules,
        session.metrics,
      );
      setStatus(`session ${session.id}`);
    } catch (e) {
      setStatus(e instanceof ApiError ? e.detail : String(e), true);
    }
  });
}

function runWorkspace(
  state: AppState,
  initialRules: string,
  initialMetrics: SessionMetrics,
): void {
  renderPalette(el("palette"), state.attributes);

  const aiCanvas = new RuleCanvas(
    el("ai-canvas"),
    state.attributes,
    state.classNames,
    null,
    { readonly: true },
  );

  let saveTimer: ReturnType<typeof setTimeout> | undefined;
  const userCanvas = new RuleCanvas(
    el("user-canvas"),
    state.attributes,
    state.classNames,
    parse(initialRules),
    {
      onChange: (root) => {
        const issues = validate(root, state.attributes);
        el("validation").textContent = issues.join("; ");
        if (issues.length > 0) return; // incomplete nodes block saving
        clearTimeout(saveTimer);
        saveTimer = setTimeout(() => void saveRules(root), 400);
      },
    },
  );

  const applyMetrics = (metrics: SessionMetrics): void => {
    renderMetricsBlock(el("user-metrics"), metrics.user_tree);
    renderMetricsBlock(el("ai-metrics"), metrics.ai_tree);
    renderSessionSummary(el("summary"), metrics);
  };
  applyMetrics(initialMetrics);

  async function saveRules(root: RuleNode): Promise<void> {
    try {
      const res = await state.client.putRules(
        state.sessionId,
        JSON.parse(serialize(root)),
      );
      // Adopt the server's canonical form as the single source of truth.
      userCanvas.setRoot(parse(res.rules));
      applyMetrics(res.metrics);
      setStatus("rules saved");
    } catch (e) {
      setStatus(e instanceof ApiError ? e.detail : String(e), true);
    }
  }

  renderSliders(el("sliders"), state.sliders, (v) => (state.sliders = v));

  async function enhance(mode: "values" | "flowchart"): Promise<void> {
    if (state.busy) return;
    state.busy = true;
    setStatus(`enhancing (${mode})…`);
    const poll = setInterval(async () => {
      try {
        const p = await state.client.progress(state.sessionId);
        if (p.running) {
          setStatus(`enhancing (${mode})… epoch ${p.epochs_done}/${p.epochs_total}`);
        }
      } catch {
        /* progress is best-effort */
      }
    }, 500);
    try {
      const { locked, restricted } = constraintIds(userCanvas.root);
      const res = await state.client.enhance(state.sessionId, {
        mode,
        constraints: {
          ...state.sliders,
          locked_nodes: locked,
          restricted_nodes: restricted,
        },
      });
      aiCanvas.setRoot(parse(res.tree));
      state.lastScript = res.script;
      state.selectedOps = [];
      renderEditOps(el("edit-history"), res.script, state.attributes, {
        selectable: true,
        onSelectionChange: (sel) => (state.selectedOps = sel),
      });
      applyMetrics(res.metrics);
      setStatus(
        res.warning
          ? `done with warning: ${res.warning}`
          : `done; TED ${res.ted}, ${res.script.length} edits`,
      );
    } catch (e) {
      setStatus(e instanceof ApiError ? e.detail : String(e), true);
    } finally {
      clearInterval(poll);
      state.busy = false;
    }
  }

  el("enhance-values").addEventListener("click", () => void enhance("values"));
  el("enhance-flowchart").addEventListener("click", () =>
    void enhance("flowchart"),
  );

  async function accept(scope: "all" | number[]): Promise<void> {
    try {
      const res = await state.client.accept(state.sessionId, scope);
      userCanvas.setRoot(parse(res.rules));
      applyMetrics(res.metrics);
      const diff = await state.client.diff(state.sessionId);
      renderEditOps(el("edit-history"), diff.ops, state.attributes, {
        selectable: true,
        onSelectionChange: (sel) => (state.selectedOps = sel),
      });
      setStatus(scope === "all" ? "accepted all AI edits" : "accepted selection");
    } catch (e) {
      setStatus(e instanceof ApiError ? e.detail : String(e), true);
    }
  }

  el("accept-all").addEventListener("click", () => void accept("all"));
  el("accept-selected").addEventListener("click", () => {
    if (state.selectedOps.length > 0) void accept(state.selectedOps);
  });

  el("simulate").addEventListener("click", async () => {
    try {
      const res = await state.client.simulate(state.sessionId, { n: 20 });
      renderSimulation(el("sim-cases"), res.cases, state.classNames);
      setStatus(`fetched ${res.cases.length} test cases`);
    } catch (e) {
      setStatus(e instanceof ApiError ? e.detail : String(e), true);
    }
  });
}

if (typeof document !== "undefined" && document.getElementById("setup")) {
  void startApp();
}
