import { describe, expect, it } from "vitest";

import pendingFixture from "./fixtures/revisions_pending.json";
import decidedFixture from "./fixtures/revisions_decided.json";
import baseTestCase from "./fixtures/base_test_case.json";

import { renderDashboard, renderRevisionPreview } from "../src/dashboard.js";
import { SuggestedRevision, TestCase } from "../src/types.js";
import { findByClass, textContent } from "../src/vdom.js";

const pending = pendingFixture as unknown as SuggestedRevision[];
const decided = decidedFixture as unknown as SuggestedRevision[];
const testCase = baseTestCase as TestCase;

describe("revision dashboard", () => {
  it("shows the empty state when there are no revisions", () => {
    const view = renderDashboard([]);
    expect(findByClass(view, "empty-state")).toHaveLength(1);
  });

  it("lists pending revisions with request and summary", () => {
    const view = renderDashboard(pending);
    const entries = findByClass(view, "revision-entry");
    expect(entries).toHaveLength(pending.length);
    expect(textContent(entries[0])).toContain(pending[0].request);
    expect(textContent(entries[0])).toContain(pending[0].summaryOfChanges[0]);
    const [apply] = findByClass(entries[0], "apply-revision");
    expect(apply.props.disabled).toBeUndefined();
  });

  it("marks decided revisions and disables their decision buttons", () => {
    const view = renderDashboard(decided);
    const rejected = findByClass(view, "status-rejected");
    const applied = findByClass(view, "status-applied");
    expect(rejected).toHaveLength(1);
    expect(applied).toHaveLength(1);
    for (const entry of [...rejected, ...applied]) {
      const [apply] = findByClass(entry, "apply-revision");
      const [reject] = findByClass(entry, "reject-revision");
      expect(apply.props.disabled).toBe("disabled");
      expect(reject.props.disabled).toBe("disabled");
    }
  });
});

describe("revision preview", () => {
  it("populates the preview with the recorded inputs and outputs", () => {
    const applied = decided.find((r) => r.status === "APPLIED")!;
    expect(applied.latestTestCaseId).toBe(testCase.testCaseId);

    const view = renderRevisionPreview(applied, testCase);
    const recorded = findByClass(view, "recorded-input");
    expect(recorded.map((n) => n.props["data-input-id"])).toEqual(
      testCase.inputs.map((v) => v.inputId)
    );
    const imageInput = recorded.find(
      (n) => n.props["data-input-id"] === "input-01-camera"
    )!;
    expect(textContent(imageInput)).toBe(testCase.inputs[0].imageRef);

    // The recorded model output shows inside the revised spec's output widget.
    expect(textContent(view)).toContain(testCase.outputs[0].text!);
  });

  it("renders an empty preview when no test case is linked", () => {
    const rejected = decided.find((r) => r.status === "REJECTED")!;
    const view = renderRevisionPreview(rejected, null);
    expect(findByClass(view, "recorded-input")).toHaveLength(0);
  });
});
