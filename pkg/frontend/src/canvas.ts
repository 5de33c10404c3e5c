/**
 * Flowchart rule canvas.
 *
 * Renders a rule tree as nested flowchart nodes: each test shows its
 * attribute and a raw-unit threshold input; the true branch is drawn first
 * (green), the false branch below it (red). Attributes can be dragged from
 * the palette onto a leaf to grow the tree; nodes carry lock / restrict
 * toggles feeding enhancement constraints.
 */

import {
  type Attribute,
  type RuleNode,
  type TestNode,
  leaf,
  nodeAt,
  replaceAt,
  test,
} from "./tree";

export interface CanvasOptions {
  /** Called with the new root after any edit. */
  onChange?: (root: RuleNode) => void;
  /** Read-only canvases (the AI side) render without controls. */
  readonly?: boolean;
}

export class RuleCanvas {
  root: RuleNode;

  constructor(
    private container: HTMLElement,
    private attributes: Attribute[],
    private classNames: string[],
    initial: RuleNode | null,
    private options: CanvasOptions = {},
  ) {
    // Deleting the whole tree leaves a single default leaf, never nothing.
    this.root = initial ?? leaf(classNames[0]);
    this.render();
  }

  setRoot(root: RuleNode): void {
    this.root = root;
    this.render();
  }

  private commit(root: RuleNode): void {
    this.root = root;
    this.render();
    this.options.onChange?.(this.root);
  }

  /** Replace the leaf at `path` with a test on `attribute` (mid-range cut). */
  growAt(path: string, attributeName: string): void {
    const attr = this.attributes.find((a) => a.name === attributeName);
    const target = nodeAt(this.root, path);
    if (!attr || !target || target.kind !== "leaf") return;
    const mid =
      attr.kind === "numeric" ? (attr.raw_min + attr.raw_max) / 2 : 0.5;
    this.commit(
      replaceAt(this.root, path, test(attr.name, mid, leaf(target.klass), leaf(target.klass))),
    );
  }

  /** Collapse the subtree at `path` to a leaf of the given class. */
  collapseAt(path: string, klass: string): void {
    this.commit(replaceAt(this.root, path, leaf(klass)));
  }

  setThreshold(path: string, raw: number): void {
    const node = nodeAt(this.root, path);
    if (!node || node.kind !== "test") return;
    this.commit(replaceAt(this.root, path, { ...node, rawThreshold: raw }));
  }

  toggle(path: string, flag: "locked" | "restricted"): void {
    const node = nodeAt(this.root, path);
    if (!node || node.kind !== "test") return;
    this.commit(replaceAt(this.root, path, { ...node, [flag]: !node[flag] }));
  }

  render(): void {
    this.container.textContent = "";
    this.container.appendChild(this.renderNode(this.root, ""));
  }

  private renderNode(node: RuleNode, path: string): HTMLElement {
    const el = document.createElement("div");
    el.dataset.path = path;
    if (node.kind === "leaf") {
      el.className = "node leaf";
      if (this.options.readonly) {
        const label = document.createElement("span");
        label.className = "leaf-class";
        label.textContent = node.klass;
        el.appendChild(label);
      } else {
        const select = document.createElement("select");
        select.className = "leaf-class";
        for (const name of this.classNames) {
          const opt = document.createElement("option");
          opt.value = name;
          opt.textContent = name;
          opt.selected = name === node.klass;
          select.appendChild(opt);
        }
        select.addEventListener("change", () =>
          this.commit(replaceAt(this.root, path, leaf(select.value))),
        );
        el.appendChild(select);
        // Leaves are drop targets: dragging an attribute here grows a test.
        el.addEventListener("dragover", (e) => e.preventDefault());
        el.addEventListener("drop", (e) => {
          e.preventDefault();
          const name = e.dataTransfer?.getData("text/attribute");
          if (name) this.growAt(path, name);
        });
      }
      return el;
    }
    el.className = "node test";
    el.appendChild(this.renderTestHeader(node, path));
    const trueBranch = document.createElement("div");
    trueBranch.className = "branch branch-true"; // green, drawn on top
    trueBranch.appendChild(this.renderNode(node.trueChild, path + "T"));
    const falseBranch = document.createElement("div");
    falseBranch.className = "branch branch-false"; // red, below
    falseBranch.appendChild(this.renderNode(node.falseChild, path + "F"));
    el.appendChild(trueBranch);
    el.appendChild(falseBranch);
    return el;
  }

  private renderTestHeader(node: TestNode, path: string): HTMLElement {
    const head = document.createElement("div");
    head.className = "test-head";
    const label = document.createElement("span");
    label.className = "test-attr";
    label.textContent = `${node.attribute} >`;
    head.appendChild(label);
    if (this.options.readonly) {
      const value = document.createElement("span");
      value.className = "test-threshold";
      value.textContent = String(node.rawThreshold);
      head.appendChild(value);
      if (node.locked) head.appendChild(flagBadge("locked"));
      if (node.restricted) head.appendChild(flagBadge("restricted"));
      return head;
    }
    const input = document.createElement("input");
    input.type = "number";
    input.className = "test-threshold";
    input.value = String(node.rawThreshold);
    const attr = this.attributes.find((a) => a.name === node.attribute);
    if (attr && attr.kind === "numeric") {
      input.min = String(attr.raw_min);
      input.max = String(attr.raw_max);
    }
    input.addEventListener("change", () => {
      const raw = Number(input.value);
      if (Number.isFinite(raw)) this.setThreshold(path, raw);
    });
    head.appendChild(input);
    head.appendChild(
      this.flagToggle(node, path, "locked", "🔒", "lock threshold"),
    );
    head.appendChild(
      this.flagToggle(node, path, "restricted", "⚠", "restrict edits"),
    );
    const remove = document.createElement("button");
    remove.className = "node-remove";
    remove.title = "collapse to a leaf";
    remove.textContent = "✕";
    remove.addEventListener("click", () =>
      this.collapseAt(path, firstLeafClass(node)),
    );
    head.appendChild(remove);
    return head;
  }

  private flagToggle(
    node: TestNode,
    path: string,
    flag: "locked" | "restricted",
    glyph: string,
    title: string,
  ): HTMLElement {
    const btn = document.createElement("button");
    btn.className = `flag flag-${flag}` + (node[flag] ? " on" : "");
    btn.title = title;
    btn.textContent = glyph;
    btn.addEventListener("click", () => this.toggle(path, flag));
    return btn;
  }
}

function firstLeafClass(node: RuleNode): string {
  return node.kind === "leaf" ? node.klass : firstLeafClass(node.trueChild);
}

function flagBadge(kind: string): HTMLElement {
  const el = document.createElement("span");
  el.className = `flag-badge ${kind}`;
  el.textContent = kind;
  return el;
}

/** The draggable attribute palette next to the editable canvas. */
export function renderPalette(
  container: HTMLElement,
  attributes: Attribute[],
): void {
  container.textContent = "";
  for (const attr of attributes) {
    const chip = document.createElement("span");
    chip.className = "palette-attr";
    chip.draggable = true;
    chip.textContent = attr.name;
    chip.addEventListener("dragstart", (e) => {
      e.dataTransfer?.setData("text/attribute", attr.name);
    });
    container.appendChild(chip);
  }
}
