/** Builder edits: pure spec updates for the property panels, plus mapping
 * service validation errors onto widget badges. The client never decides
 * validity itself; it displays what the service reports. */

import { ApiError } from "./api.js";
import { PrototypeSpec, Violation } from "./types.js";

export interface WidgetEdit {
  widgetId: string;
  field: string;
  value: unknown;
}

function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

/** Apply one property edit and return the new spec; the input is untouched
 * so preview state can diff against it. */
export function applyWidgetEdit(spec: PrototypeSpec, edit: WidgetEdit): PrototypeSpec {
  const next = clone(spec);
  const widgets: { id: string }[] = [...next.inputs, ...next.actions, ...next.outputs];
  const target = widgets.find((w) => w.id === edit.widgetId);
  if (!target) throw new Error(`no widget '${edit.widgetId}'`);
  (target as Record<string, unknown>)[edit.field] = edit.value;
  return next;
}

export function editAppInfo(spec: PrototypeSpec, field: string, value: string): PrototypeSpec {
  const next = clone(spec);
  (next.appInfo as unknown as Record<string, string>)[field] = value;
  return next;
}

/** Violations keyed by path, for rendering badges next to widgets. A
 * rejected save (INVALID_SPEC) carries them in the error detail. */
export function violationBadges(source: ApiError | Violation[]): Map<string, Violation[]> {
  const violations = Array.isArray(source) ? source : (source.detail as Violation[] | undefined) ?? [];
  const badges = new Map<string, Violation[]>();
  for (const violation of violations) {
    const existing = badges.get(violation.path) ?? [];
    existing.push(violation);
    badges.set(violation.path, existing);
  }
  return badges;
}
