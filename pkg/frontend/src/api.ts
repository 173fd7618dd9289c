/** Thin typed client over the service HTTP API. The fetch function is
 * injectable so tests drive the client with recorded fixtures. */

import {
  PrototypeSpec,
  ReviseOutcome,
  SharedPrototype,
  SuggestedRevision,
  TestCase,
  InputValuePayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly detail?: unknown
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
    private readonly operatorKey?: string
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    headers: Record<string, string> = {}
  ): Promise<T> {
    if (this.operatorKey) headers["X-Operator-Key"] = this.operatorKey;
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.code ?? "UNKNOWN",
        payload.message ?? "request failed",
        payload.detail
      );
    }
    return payload as T;
  }

  fetchShared(shareToken: string): Promise<SharedPrototype> {
    return this.request("GET", `/p/${shareToken}`);
  }

  createPrototype(spec: PrototypeSpec): Promise<{ prototypeId: string; versionId: string; shareToken: string }> {
    return this.request("POST", "/prototypes", spec);
  }

  updatePrototype(prototypeId: string, spec: PrototypeSpec, expectedHeadVersion: string): Promise<{ versionId: string }> {
    return this.request("PUT", `/prototypes/${prototypeId}`, { spec, expectedHeadVersion });
  }

  async uploadBlob(prototypeId: string, data: Blob): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/prototypes/${prototypeId}/blobs`, {
      method: "POST",
      headers: { "Content-Type": data.type || "image/jpeg" },
      body: data,
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload.code ?? "UNKNOWN", payload.message ?? "upload failed");
    }
    return payload.blobId as string;
  }

  run(prototypeId: string, actionId: string, inputs: InputValuePayload[]): Promise<TestCase> {
    return this.request("POST", `/prototypes/${prototypeId}/run`, { actionId, inputs });
  }

  listTestCases(prototypeId: string): Promise<TestCase[]> {
    return this.request("GET", `/prototypes/${prototypeId}/testcases`);
  }

  setFeedback(prototypeId: string, testCaseId: string, feedback: string): Promise<TestCase> {
    return this.request("POST", `/prototypes/${prototypeId}/testcases/${testCaseId}/feedback`, { feedback });
  }

  nlRevise(prototypeId: string, request: string, targetOutputId?: string): Promise<ReviseOutcome> {
    return this.request("POST", `/prototypes/${prototypeId}/nl-revise`, {
      request,
      ...(targetOutputId ? { targetOutputId } : {}),
    });
  }

  submitRevision(
    prototypeId: string,
    outcome: ReviseOutcome,
    request: string,
    latestTestCaseId: string | null
  ): Promise<{ revisionId: string; status: string }> {
    return this.request("POST", `/prototypes/${prototypeId}/revisions`, {
      baseVersionId: outcome.baseVersionId,
      request,
      revisedSpec: outcome.revisedSpec,
      summaryOfChanges: outcome.summaryOfChanges,
      latestTestCaseId,
    });
  }

  listRevisions(prototypeId: string): Promise<SuggestedRevision[]> {
    return this.request("GET", `/prototypes/${prototypeId}/revisions`);
  }

  applyRevision(revisionId: string): Promise<{ versionId: string; status: string }> {
    return this.request("POST", `/revisions/${revisionId}/apply`);
  }

  rejectRevision(revisionId: string): Promise<{ status: string }> {
    return this.request("POST", `/revisions/${revisionId}/reject`);
  }
}
