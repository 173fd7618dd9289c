/** Turn a prototype spec into a view tree: one control per widget, in spec
 * order. All spec logic (validation, diffing) stays on the service; this
 * module only maps JSON to structure. */

import { h, VNode } from "./vdom.js";
import {
  ActionWidget,
  InputWidget,
  OutputWidget,
  PrototypeSpec,
  Violation,
} from "./types.js";

export function renderInput(widget: InputWidget): VNode {
  const base = { "data-widget-id": widget.id, "aria-label": widget.description };
  switch (widget.type) {
    case "TEXT":
      return h("input", {
        ...base,
        class: "input-text",
        type: "text",
        placeholder: widget.placeholder ?? "",
      });
    case "CAMERA":
      return h("camera-capture", { ...base, class: "input-camera" });
    case "UPLOAD_IMAGE":
      return h("input", { ...base, class: "input-upload", type: "file", accept: "image/*" });
    case "OPTIONS_LIST":
      return h(
        "select",
        { ...base, class: "input-options" },
        widget.options.map((option) => h("option", { value: option }, option))
      );
  }
}

export function renderAction(widget: ActionWidget): VNode {
  if (widget.type === "RUN_BUTTON") {
    return h("button", {
      "data-widget-id": widget.id,
      class: "action-run",
      type: "button",
    }, "Run");
  }
  return h("timer-indicator", {
    "data-widget-id": widget.id,
    class: "action-timer",
    "data-interval-seconds": widget.intervalSeconds ?? 0,
  });
}

export function renderOutput(widget: OutputWidget, resultText?: string | null): VNode {
  const base = { "data-widget-id": widget.id };
  if (widget.displayStyle === "CAROUSEL_CARD") {
    const cards = (resultText ?? "")
      .split("\n\n")
      .filter((chunk) => chunk.trim().length > 0)
      .map((chunk) => h("article", { class: "carousel-card" }, chunk));
    return h("section", { ...base, class: "output-carousel" }, cards);
  }
  return h("section", { ...base, class: "output-text" }, resultText ?? "");
}

export interface RenderOptions {
  /** Latest run results keyed by output widget id. */
  results?: Record<string, string | null>;
  /** Desktop builder shows the phone frame beside the editing panels. */
  frame?: "phone-preview" | "fullscreen";
}

export function renderPrototype(spec: PrototypeSpec, options: RenderOptions = {}): VNode {
  const results = options.results ?? {};
  const controls = [
    ...spec.inputs.filter((w) => w.type !== "CAMERA" || !isFullscreenCamera(spec)).map(renderInput),
    ...spec.actions.map(renderAction),
    ...spec.outputs.map((w) => renderOutput(w, results[w.id])),
  ];
  const fontClass = `font-${spec.displayConfig?.fontStyle ?? "sans"}`;
  const frameClass = options.frame ?? "fullscreen";

  if (isFullscreenCamera(spec)) {
    // The camera layer sits first (behind); every other control floats in
    // the overlay above it.
    const cameras = spec.inputs.filter((w) => w.type === "CAMERA").map(renderInput);
    return h(
      "main",
      { class: `prototype ${frameClass} ${fontClass} layout-camera-fullscreen` },
      h("div", { class: "camera-layer" }, cameras),
      h("div", { class: "overlay-controls" }, controls)
    );
  }
  return h(
    "main",
    { class: `prototype ${frameClass} ${fontClass}` },
    h("div", { class: "controls" }, controls)
  );
}

function isFullscreenCamera(spec: PrototypeSpec): boolean {
  return spec.displayConfig?.layoutStyle === "CAMERA_FULLSCREEN";
}

export function renderErrorPanel(violations: Violation[]): VNode {
  return h(
    "aside",
    { class: "error-panel", role: "alert" },
    violations.map((violation) =>
      h(
        "p",
        { class: "violation", "data-code": violation.code, "data-path": violation.path },
        `${violation.code}: ${violation.message}`
      )
    )
  );
}

/** Ordered widget ids as rendered; the revise toggle diffs these. */
export function renderedWidgetIds(view: VNode): string[] {
  const ids: string[] = [];
  const walk = (node: VNode | string): void => {
    if (typeof node === "string") return;
    const id = node.props["data-widget-id"];
    if (typeof id === "string") ids.push(id);
    node.children.forEach(walk);
  };
  walk(view);
  return ids;
}
