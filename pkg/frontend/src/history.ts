/**
 * Edit-history panel: renders the server's edit script verbatim, one entry
 * per operation with an insert/update/remove badge, and optional per-op
 * checkboxes for selective acceptance.
 */

import type { EditOpJson, NodeDesc } from "./api";
import type { Attribute } from "./tree";

export function describeNode(
  desc: NodeDesc | null,
  attributes: Attribute[],
): string {
  if (!desc) return "—";
  if (desc.kind === "leaf") return `class ${desc.class}`;
  const attr = attributes[desc.attribute ?? -1];
  if (!attr) return `attr #${desc.attribute} > ${desc.threshold}`;
  const raw =
    attr.kind === "numeric"
      ? attr.raw_min + (desc.threshold ?? 0) * (attr.raw_max - attr.raw_min)
      : (desc.threshold ?? 0);
  return `${attr.name} > ${Number(raw.toFixed(4))}`;
}

export function opSummary(op: EditOpJson, attributes: Attribute[]): string {
  const at = op.kind === "insert" ? op.target_path : op.source_path;
  const where = at === "" ? "root" : (at ?? "?");
  switch (op.kind) {
    case "insert":
      return `insert ${describeNode(op.after, attributes)} at ${where}`;
    case "remove":
      return `remove ${describeNode(op.before, attributes)} at ${where}`;
    case "update":
      return (
        `update ${where}: ${describeNode(op.before, attributes)} → ` +
        describeNode(op.after, attributes)
      );
  }
}

export interface HistoryPanelOptions {
  selectable?: boolean;
  onSelectionChange?: (selected: number[]) => void;
}

/**
 * Render `ops` into `container`. The list length and order always equal the
 * server's script — every op becomes exactly one `.edit-op` row.
 */
export function renderEditOps(
  container: HTMLElement,
  ops: EditOpJson[],
  attributes: Attribute[],
  options: HistoryPanelOptions = {},
): void {
  container.textContent = "";
  const list = document.createElement("ol");
  list.className = "edit-ops";
  const selected = new Set<number>();
  ops.forEach((op, index) => {
    const item = document.createElement("li");
    item.className = "edit-op";
    item.dataset.kind = op.kind;
    item.dataset.index = String(index);
    if (options.selectable) {
      const box = document.createElement("input");
      box.type = "checkbox";
      box.className = "op-select";
      box.disabled = op.kind !== "update"; // partial accept covers updates only
      box.addEventListener("change", () => {
        if (box.checked) selected.add(index);
        else selected.delete(index);
        options.onSelectionChange?.([...selected].sort((a, b) => a - b));
      });
      item.appendChild(box);
    }
    const badge = document.createElement("span");
    badge.className = `badge badge-${op.kind}`;
    badge.textContent = op.kind;
    item.appendChild(badge);
    const text = document.createElement("span");
    text.className = "op-text";
    text.textContent = `${opSummary(op, attributes)} (cost ${op.cost})`;
    item.appendChild(text);
    list.appendChild(item);
  });
  if (ops.length === 0) {
    const empty = document.createElement("p");
    empty.className = "edit-ops-empty";
    empty.textContent = "No differences.";
    container.appendChild(empty);
    return;
  }
  container.appendChild(list);
}
