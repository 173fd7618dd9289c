/** Revise-with-AI panel: change summary plus a two-version toggle that
 * re-renders the widget set of whichever side is selected. */

import { h, VNode } from "./vdom.js";
import { renderPrototype, renderedWidgetIds } from "./render.js";
import { ReviseOutcome } from "./types.js";

export type ToggleSide = "original" | "revised";

export function renderSummary(outcome: ReviseOutcome): VNode {
  return h(
    "section",
    { class: "revision-summary" },
    h("h2", {}, "Summary of changes"),
    h("ul", {}, outcome.summaryOfChanges.map((line) => h("li", {}, line)))
  );
}

export function renderToggleView(outcome: ReviseOutcome, side: ToggleSide): VNode {
  const spec = side === "revised" ? outcome.revisedSpec : outcome.originalSpec;
  return h(
    "section",
    { class: `toggle-view side-${side}` },
    renderSummary(outcome),
    h(
      "div",
      { class: "toggle-buttons" },
      h("button", { class: "toggle-original", "aria-pressed": side === "original" }, "Original"),
      h("button", { class: "toggle-revised", "aria-pressed": side === "revised" }, "Revised")
    ),
    renderPrototype(spec)
  );
}

/** Widget ids that appear only on the given side; used to check the toggle
 * really swaps widget sets in line with the service's structural diff. */
export function exclusiveWidgetIds(outcome: ReviseOutcome, side: ToggleSide): string[] {
  const original = new Set(renderedWidgetIds(renderPrototype(outcome.originalSpec)));
  const revised = new Set(renderedWidgetIds(renderPrototype(outcome.revisedSpec)));
  const [own, other] = side === "revised" ? [revised, original] : [original, revised];
  return [...own].filter((id) => !other.has(id));
}
