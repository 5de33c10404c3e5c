/** Typed client for the ruleflow HTTP gateway. All state lives server-side. */

export interface SplitPredicate {
  attribute: string;
  comparator: string;
  raw_threshold: number;
}

export interface EditOpJson {
  kind: "insert" | "remove" | "update";
  cost: number;
  source_path: string | null;
  target_path: string | null;
  before: NodeDesc | null;
  after: NodeDesc | null;
}

export interface NodeDesc {
  kind: "leaf" | "internal";
  class?: string;
  attribute?: number;
  threshold?: number;
}

export interface SplitAccuracy {
  train: number | null;
  test: number | null;
}

export interface SessionMetrics {
  user_tree: Record<string, SplitAccuracy>;
  ai_tree: Record<string, SplitAccuracy>;
  faithfulness: number;
  ted_ai_to_guideline: number;
  ted_ai_to_user: number;
}

export interface EnhanceResponse {
  tree: string;
  script: EditOpJson[];
  ted: number;
  warning: string | null;
  loss_history: Record<string, number>[];
  metrics: SessionMetrics;
}

export interface SimulatedCase {
  id: number;
  values: Record<string, number | string>;
  ai_prediction: string;
  ground_truth: string;
}

export interface ProgressSnapshot {
  running: boolean;
  epochs_done: number;
  epochs_total: number;
  history: Record<string, number>[];
}

export interface HistoryEvent {
  timestamp: number;
  actor: "user" | "ai";
  ops: EditOpJson[];
  note: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class Client {
  constructor(public baseUrl: string) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    if (!res.ok) {
      let detail = text;
      try {
        detail = JSON.parse(text).detail ?? text;
      } catch {
        /* not JSON */
      }
      throw new ApiError(res.status, detail);
    }
    return JSON.parse(text) as T;
  }

  createDataset(args: {
    csv: string;
    schema: unknown[];
    label_column: string;
    class_names?: string[];
  }): Promise<{ id: string; rows: number; class_names: string[] }> {
    return this.request("POST", "/datasets", args);
  }

  createSession(args: {
    dataset: string;
    split: SplitPredicate;
    seed?: number;
  }): Promise<{ id: string; rules: string; metrics: SessionMetrics }> {
    return this.request("POST", "/sessions", args);
  }

  getRules(sid: string): Promise<{ rules: string }> {
    return this.request("GET", `/sessions/${sid}/rules`);
  }

  putRules(
    sid: string,
    rules: unknown,
  ): Promise<{ rules: string; metrics: SessionMetrics }> {
    return this.request("PUT", `/sessions/${sid}/rules`, { rules });
  }

  enhance(
    sid: string,
    args: {
      mode: "values" | "flowchart";
      constraints?: {
        prediction_similarity: number;
        structure_similarity: number;
        locked_nodes: number[];
        restricted_nodes: number[];
      };
      epochs?: number;
      learning_rate?: number;
      seed?: number;
    },
  ): Promise<EnhanceResponse> {
    return this.request("POST", `/sessions/${sid}/enhance`, args);
  }

  progress(sid: string): Promise<ProgressSnapshot> {
    return this.request("GET", `/sessions/${sid}/progress`);
  }

  accept(
    sid: string,
    scope: "all" | number[],
  ): Promise<{ rules: string; metrics: SessionMetrics }> {
    return this.request("POST", `/sessions/${sid}/accept`, { scope });
  }

  simulate(
    sid: string,
    args: { n?: number; case_ids?: number[]; seed?: number },
  ): Promise<{ cases: SimulatedCase[] }> {
    return this.request("POST", `/sessions/${sid}/simulate`, args);
  }

  history(sid: string): Promise<{ history: HistoryEvent[] }> {
    return this.request("GET", `/sessions/${sid}/history`);
  }

  metrics(sid: string): Promise<SessionMetrics> {
    return this.request("GET", `/sessions/${sid}/metrics`);
  }

  diff(sid: string): Promise<{ ops: EditOpJson[] }> {
    return this.request("GET", `/sessions/${sid}/diff`);
  }
}
