/** JSON shapes exchanged with the prototype service. */

export type InputType = "TEXT" | "CAMERA" | "UPLOAD_IMAGE" | "OPTIONS_LIST";
export type ActionType = "RUN_BUTTON" | "TIMER";
export type OutputType = "TEXT" | "MULTIMODAL" | "IMAGE_GENERATION";
export type DisplayStyle = "PLAIN_TEXT" | "CAROUSEL_CARD";
export type LayoutStyle = "CAMERA_INLINE" | "CAMERA_FULLSCREEN";

export interface AppInfo {
  funName: string;
  shortDescription: string;
  functionalDescription: string;
}

export interface InputWidget {
  id: string;
  type: InputType;
  description: string;
  options: string[];
  placeholder?: string;
}

export interface ActionWidget {
  id: string;
  type: ActionType;
  intervalSeconds?: number;
}

export interface ModelParams {
  temperature: number;
  stopTokens: string[];
}

export interface OutputWidget {
  id: string;
  type: OutputType;
  description: string;
  modelInstructions: string;
  principles: string[];
  prompt: string;
  triggeredBy: string;
  modelParams?: ModelParams;
  displayStyle?: DisplayStyle;
}

export interface DisplayConfig {
  fontStyle?: string;
  layoutStyle?: LayoutStyle;
}

export interface PrototypeSpec {
  appInfo: AppInfo;
  summaryOfChanges?: string[];
  inputs: InputWidget[];
  actions: ActionWidget[];
  outputs: OutputWidget[];
  displayConfig?: DisplayConfig;
}

export interface Violation {
  code: string;
  path: string;
  message: string;
}

export interface InputValuePayload {
  inputId: string;
  text?: string;
  imageRef?: string;
  selectedOption?: string;
}

export interface OutputResultPayload {
  outputId: string;
  text: string | null;
  imageRef: string | null;
}

export interface TestCase {
  testCaseId: string;
  prototypeId: string;
  versionId: string;
  inputs: InputValuePayload[];
  outputs: OutputResultPayload[];
  feedback: string | null;
  createdAt: string;
}

export interface PrincipleChange {
  added: number;
  revised: number;
  removed: number;
}

export interface StructuralDiff {
  addedInputs: string[];
  removedInputs: string[];
  modifiedInputs: string[];
  addedOutputs: string[];
  removedOutputs: string[];
  modifiedOutputs: string[];
  addedActions: string[];
  removedActions: string[];
  appInfoChanged: boolean;
  principleChanges: Record<string, PrincipleChange>;
}

export interface ReviseOutcome {
  prototypeId: string;
  baseVersionId: string;
  route: { thought: string; opType: string };
  originalSpec: PrototypeSpec;
  revisedSpec: PrototypeSpec;
  originalSpecText: string;
  revisedSpecText: string;
  summaryOfChanges: string[];
  structuralDiff: StructuralDiff;
}

export interface SuggestedRevision {
  revisionId: string;
  prototypeId: string;
  baseVersionId: string;
  request: string;
  revisedSpec: PrototypeSpec;
  summaryOfChanges: string[];
  latestTestCaseId: string | null;
  status: "PENDING" | "APPLIED" | "REJECTED";
  createdAt: string;
}

export interface SharedPrototype {
  prototypeId: string;
  headVersionId: string;
  spec: PrototypeSpec;
}

/** The three shipped font tokens selectable in displayConfig.fontStyle. */
export const FONT_TOKENS = ["sans", "serif", "mono"] as const;
