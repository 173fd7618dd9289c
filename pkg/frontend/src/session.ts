/** Tester-side session state: the shared prototype, the latest test case
 * draft, and a client-side pending revision outcome that exists only until
 * the tester accepts (submit) or rejects (revert). */

import { ApiClient } from "./api.js";
import { PrototypeSpec, ReviseOutcome, TestCase } from "./types.js";

export class ClientSession {
  private pendingOutcome: ReviseOutcome | null = null;
  private readonly originalSpec: PrototypeSpec;
  private readonly originalSpecText: string;
  latestTestCase: TestCase | null = null;

  constructor(
    public readonly shareToken: string,
    public readonly prototypeId: string,
    public readonly headVersionId: string,
    spec: PrototypeSpec
  ) {
    this.originalSpec = spec;
    this.originalSpecText = JSON.stringify(spec);
  }

  /** The spec the runner should render right now. */
  currentSpec(): PrototypeSpec {
    return this.pendingOutcome ? this.pendingOutcome.revisedSpec : this.originalSpec;
  }

  currentSpecText(): string {
    return this.pendingOutcome
      ? JSON.stringify(this.pendingOutcome.revisedSpec)
      : this.originalSpecText;
  }

  hasPendingRevision(): boolean {
    return this.pendingOutcome !== null;
  }

  pending(): ReviseOutcome | null {
    return this.pendingOutcome;
  }

  async reviseWithAi(api: ApiClient, request: string): Promise<ReviseOutcome> {
    const outcome = await api.nlRevise(this.prototypeId, request);
    this.pendingOutcome = outcome;
    return outcome;
  }

  /** Accept: submit the pending outcome with the latest test case attached. */
  async accept(api: ApiClient, request: string): Promise<string> {
    if (!this.pendingOutcome) throw new Error("no pending revision to accept");
    const submitted = await api.submitRevision(
      this.prototypeId,
      this.pendingOutcome,
      request,
      this.latestTestCase?.testCaseId ?? null
    );
    this.pendingOutcome = null;
    return submitted.revisionId;
  }

  /** Reject: discard the pending outcome and restore the original spec. */
  revert(): void {
    this.pendingOutcome = null;
  }
}
