import { describe, expect, it } from "vitest";

import outcomeFixture from "./fixtures/revise_outcome_structure.json";
import sharedFixture from "./fixtures/shared_showcase.json";

import { ApiClient } from "../src/api.js";
import { exclusiveWidgetIds, renderToggleView } from "../src/revise.js";
import { renderedWidgetIds } from "../src/render.js";
import { ClientSession } from "../src/session.js";
import { ReviseOutcome, SharedPrototype } from "../src/types.js";
import { findByClass, textContent } from "../src/vdom.js";

const outcome = outcomeFixture as unknown as ReviseOutcome;

function fixtureFetch(routes: Record<string, unknown>, calls?: { url: string; body?: unknown }[]) {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    calls?.push({ url, body: init?.body ? JSON.parse(String(init.body)) : undefined });
    const match = Object.entries(routes).find(([prefix]) => url.includes(prefix));
    if (!match) throw new Error(`no fixture for ${url}`);
    return {
      ok: true,
      status: 200,
      json: async () => match[1],
    } as Response;
  };
}

describe("revise-with-AI toggle", () => {
  it("switches rendered widget sets in line with the structural diff", () => {
    const revisedOnly = exclusiveWidgetIds(outcome, "revised");
    expect(new Set(revisedOnly)).toEqual(new Set(outcome.structuralDiff.addedInputs));
    expect(exclusiveWidgetIds(outcome, "original")).toEqual(
      outcome.structuralDiff.removedInputs
    );

    const originalView = renderToggleView(outcome, "original");
    const revisedView = renderToggleView(outcome, "revised");
    const originalIds = renderedWidgetIds(originalView);
    const revisedIds = renderedWidgetIds(revisedView);
    for (const added of outcome.structuralDiff.addedInputs) {
      expect(originalIds).not.toContain(added);
      expect(revisedIds).toContain(added);
    }
  });

  it("shows the service-provided change summary", () => {
    const view = renderToggleView(outcome, "revised");
    const [summary] = findByClass(view, "revision-summary");
    expect(textContent(summary)).toContain(outcome.summaryOfChanges[0]);
  });

  it("marks the selected side", () => {
    const view = renderToggleView(outcome, "revised");
    const [revisedButton] = findByClass(view, "toggle-revised");
    const [originalButton] = findByClass(view, "toggle-original");
    expect(revisedButton.props["aria-pressed"]).toBe(true);
    expect(originalButton.props["aria-pressed"]).toBe(false);
  });
});

describe("client session", () => {
  const shared = sharedFixture as SharedPrototype;

  function makeSession(): ClientSession {
    return new ClientSession("tok", outcome.prototypeId, outcome.baseVersionId,
                             outcome.originalSpec);
  }

  it("reject restores the byte-identical original spec", async () => {
    const session = makeSession();
    const before = session.currentSpecText();
    const api = new ApiClient("", fixtureFetch({ "/nl-revise": outcome }));
    await session.reviseWithAi(api, "Also ask about the weather");
    expect(session.hasPendingRevision()).toBe(true);
    expect(session.currentSpecText()).not.toBe(before);

    session.revert();
    expect(session.hasPendingRevision()).toBe(false);
    expect(session.currentSpecText()).toBe(before);
  });

  it("accept submits the outcome with the latest test case id", async () => {
    const session = makeSession();
    const calls: { url: string; body?: unknown }[] = [];
    const api = new ApiClient("", fixtureFetch({
      "/nl-revise": outcome,
      "/revisions": { revisionId: "rev-1", status: "PENDING" },
    }, calls));
    session.latestTestCase = {
      testCaseId: "tc-42", prototypeId: outcome.prototypeId,
      versionId: outcome.baseVersionId, inputs: [], outputs: [],
      feedback: null, createdAt: "",
    };
    await session.reviseWithAi(api, "Also ask about the weather");
    const revisionId = await session.accept(api, "Also ask about the weather");

    expect(revisionId).toBe("rev-1");
    expect(session.hasPendingRevision()).toBe(false);
    const submit = calls.find((c) => c.url.endsWith("/revisions"));
    const body = submit?.body as Record<string, unknown>;
    expect(body.latestTestCaseId).toBe("tc-42");
    expect(body.baseVersionId).toBe(outcome.baseVersionId);
    expect(body.revisedSpec).toEqual(outcome.revisedSpec);
    expect(body.summaryOfChanges).toEqual(outcome.summaryOfChanges);
  });

  it("accept without a pending outcome is an error", async () => {
    const session = makeSession();
    const api = new ApiClient("", fixtureFetch({}));
    await expect(session.accept(api, "x")).rejects.toThrow("no pending revision");
  });

  it("sessions start on the shared head spec", () => {
    const session = new ClientSession("tok", shared.prototypeId,
                                      shared.headVersionId, shared.spec);
    expect(session.currentSpec()).toEqual(shared.spec);
  });
});
