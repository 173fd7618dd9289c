/** Designer dashboard: pending and decided revisions, with a preview that
 * replays the revision's associated test case when one exists. */

import { ApiClient } from "./api.js";
import { h, VNode } from "./vdom.js";
import { renderPrototype } from "./render.js";
import { SuggestedRevision, TestCase } from "./types.js";

/** Poll the revision list in the background; returns a stop function. */
export function startRevisionPolling(
  api: ApiClient,
  prototypeId: string,
  onUpdate: (revisions: SuggestedRevision[]) => void,
  intervalMs = 5000
): () => void {
  const tick = async (): Promise<void> => {
    onUpdate(await api.listRevisions(prototypeId));
  };
  void tick();
  const timer = setInterval(() => void tick(), intervalMs);
  return () => clearInterval(timer);
}

export function renderDashboard(revisions: SuggestedRevision[]): VNode {
  if (revisions.length === 0) {
    return h("section", { class: "dashboard empty" },
      h("p", { class: "empty-state" }, "No suggested revisions yet."));
  }
  return h(
    "section",
    { class: "dashboard" },
    revisions.map((revision) =>
      h(
        "article",
        {
          class: `revision-entry status-${revision.status.toLowerCase()}`,
          "data-revision-id": revision.revisionId,
        },
        h("p", { class: "revision-request" }, revision.request),
        h("ul", { class: "revision-summary" },
          revision.summaryOfChanges.map((line) => h("li", {}, line))),
        h("button", {
          class: "apply-revision",
          disabled: revision.status !== "PENDING" ? "disabled" : undefined,
        }, "Apply"),
        h("button", {
          class: "reject-revision",
          disabled: revision.status !== "PENDING" ? "disabled" : undefined,
        }, "Reject")
      )
    )
  );
}

/** Selecting a revision populates the phone preview with the inputs and
 * outputs recorded in its associated test case. */
export function renderRevisionPreview(
  revision: SuggestedRevision,
  testCase: TestCase | null
): VNode {
  const results: Record<string, string | null> = {};
  for (const output of testCase?.outputs ?? []) {
    results[output.outputId] = output.text ?? output.imageRef;
  }
  const recordedInputs = (testCase?.inputs ?? []).map((value) =>
    h("dd", {
      class: "recorded-input",
      "data-input-id": value.inputId,
    }, value.text ?? value.selectedOption ?? value.imageRef ?? "")
  );
  return h(
    "section",
    { class: "revision-preview", "data-revision-id": revision.revisionId },
    h("dl", { class: "recorded-inputs" }, recordedInputs),
    renderPrototype(revision.revisedSpec, { results, frame: "phone-preview" })
  );
}
