/**
 * Client-side rule tree model.
 *
 * The canvas edits this structure and serializes it to the same canonical
 * JSONLogic bytes the server produces: `{"if":[{">":[name,raw]},true,false]}`
 * with no whitespace, raw-unit thresholds rounded to 6 decimals, and values
 * within 1e-9 of an integer emitted as integers. The server remains the
 * source of truth — after every PUT the client adopts the returned canonical
 * string — but equal trees must already serialize to equal bytes locally.
 */

export interface Attribute {
  name: string;
  kind: "numeric" | "binary";
  raw_min: number;
  raw_max: number;
  true_label?: string;
  false_label?: string;
}

export type RuleNode = LeafNode | TestNode;

export interface LeafNode {
  kind: "leaf";
  klass: string;
}

export interface TestNode {
  kind: "test";
  attribute: string;
  /** Raw-unit threshold, as typed by the user or received from the server. */
  rawThreshold: number;
  trueChild: RuleNode;
  falseChild: RuleNode;
  locked?: boolean;
  restricted?: boolean;
}

export function leaf(klass: string): LeafNode {
  return { kind: "leaf", klass };
}

export function test(
  attribute: string,
  rawThreshold: number,
  trueChild: RuleNode,
  falseChild: RuleNode,
): TestNode {
  return { kind: "test", attribute, rawThreshold, trueChild, falseChild };
}

/** Mirror of the server's raw-threshold formatting. */
export function formatRaw(value: number): number {
  const r = Math.round(value * 1e6) / 1e6;
  const n = Math.round(r);
  return Math.abs(r - n) < 1e-9 ? n : r;
}

function toPlain(node: RuleNode): unknown {
  if (node.kind === "leaf") return node.klass;
  return {
    if: [
      { ">": [node.attribute, formatRaw(node.rawThreshold)] },
      toPlain(node.trueChild),
      toPlain(node.falseChild),
    ],
  };
}

/** Canonical JSONLogic text; byte-identical to the server's for equal trees. */
export function serialize(root: RuleNode): string {
  return JSON.stringify(toPlain(root));
}

export class RuleParseError extends Error {}

function fromPlain(obj: unknown): RuleNode {
  if (typeof obj === "string") return leaf(obj);
  if (obj === null || typeof obj !== "object" || Array.isArray(obj)) {
    throw new RuleParseError(`expected an "if" object or class label`);
  }
  const keys = Object.keys(obj as object);
  if (keys.length !== 1 || keys[0] !== "if") {
    throw new RuleParseError(`unexpected keys ${keys.join(",")}`);
  }
  const args = (obj as Record<string, unknown>)["if"];
  if (!Array.isArray(args) || args.length !== 3) {
    throw new RuleParseError(`"if" must have [condition, true, false]`);
  }
  const [cond, tbr, fbr] = args;
  if (cond === null || typeof cond !== "object" || Array.isArray(cond)) {
    throw new RuleParseError("malformed condition");
  }
  const centries = Object.entries(cond as Record<string, unknown>);
  if (centries.length !== 1 || centries[0][0] !== ">") {
    throw new RuleParseError(`unsupported operator ${centries[0]?.[0]}`);
  }
  const operands = centries[0][1];
  if (!Array.isArray(operands) || operands.length !== 2) {
    throw new RuleParseError(`">" needs [attribute, threshold]`);
  }
  const [name, raw] = operands;
  if (typeof name !== "string" || typeof raw !== "number") {
    throw new RuleParseError("condition operands must be [string, number]");
  }
  return test(name, raw, fromPlain(tbr), fromPlain(fbr));
}

export function parse(text: string): RuleNode {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new RuleParseError(`invalid JSON: ${(e as Error).message}`);
  }
  return fromPlain(doc);
}

/**
 * Paths address nodes as strings of "F"/"T" branch letters from the root,
 * matching the server's edit-script addressing ("" is the root).
 */
export function nodeAt(root: RuleNode, path: string): RuleNode | null {
  let node: RuleNode = root;
  for (const step of path) {
    if (node.kind !== "test") return null;
    node = step === "T" ? node.trueChild : node.falseChild;
  }
  return node;
}

/** Structurally replace the node at `path`, returning a new root. */
export function replaceAt(
  root: RuleNode,
  path: string,
  replacement: RuleNode,
): RuleNode {
  if (path === "") return replacement;
  if (root.kind !== "test") {
    throw new RuleParseError(`path ${path} walks through a leaf`);
  }
  const step = path[0];
  const rest = path.slice(1);
  return {
    ...root,
    trueChild:
      step === "T" ? replaceAt(root.trueChild, rest, replacement) : root.trueChild,
    falseChild:
      step === "F" ? replaceAt(root.falseChild, rest, replacement) : root.falseChild,
  };
}

/**
 * Server node ids, as assigned when the server parses this tree's JSONLogic:
 * nodes are numbered in the order (true subtree, false subtree, self).
 * Lock/restrict constraints are expressed in these ids.
 */
export function serverNodeIds(root: RuleNode): Map<string, number> {
  const ids = new Map<string, number>();
  let next = 0;
  const walk = (node: RuleNode, path: string): void => {
    if (node.kind === "test") {
      walk(node.trueChild, path + "T");
      walk(node.falseChild, path + "F");
    }
    ids.set(path, next++);
  };
  walk(root, "");
  return ids;
}

/** Ids of internal nodes currently flagged as locked / restricted. */
export function constraintIds(root: RuleNode): {
  locked: number[];
  restricted: number[];
} {
  const ids = serverNodeIds(root);
  const locked: number[] = [];
  const restricted: number[] = [];
  const walk = (node: RuleNode, path: string): void => {
    if (node.kind !== "test") return;
    const id = ids.get(path)!;
    if (node.locked) locked.push(id);
    if (node.restricted) restricted.push(id);
    walk(node.trueChild, path + "T");
    walk(node.falseChild, path + "F");
  };
  walk(root, "");
  return { locked: locked.sort((a, b) => a - b), restricted: restricted.sort((a, b) => a - b) };
}

/** Validation issues that block saving (incomplete nodes, bad thresholds). */
export function validate(root: RuleNode, attributes: Attribute[]): string[] {
  const byName = new Map(attributes.map((a) => [a.name, a]));
  const issues: string[] = [];
  const walk = (node: RuleNode, path: string): void => {
    if (node.kind === "leaf") {
      if (!node.klass) issues.push(`leaf at "${path || "root"}" has no class`);
      return;
    }
    const attr = byName.get(node.attribute);
    if (!attr) {
      issues.push(`node at "${path || "root"}" tests unknown attribute ${node.attribute}`);
    } else if (!Number.isFinite(node.rawThreshold)) {
      issues.push(`node at "${path || "root"}" has no threshold`);
    } else if (
      attr.kind === "numeric" &&
      (node.rawThreshold < attr.raw_min || node.rawThreshold > attr.raw_max)
    ) {
      issues.push(
        `node at "${path || "root"}": ${node.rawThreshold} outside ` +
          `[${attr.raw_min}, ${attr.raw_max}] for ${attr.name}`,
      );
    }
    walk(node.trueChild, path + "T");
    walk(node.falseChild, path + "F");
  };
  walk(root, "");
  return issues;
}
