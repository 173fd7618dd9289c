"""Prototype specification model: parse, validate, serialize, diff, fork.

All functions here are pure and operate on immutable values; the canonical
wire form is JSON with a fixed key order so serialization is byte-stable.
"""

from __future__ import annotations

import copy
import difflib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class InputType(str, Enum):
    TEXT = "TEXT"
    CAMERA = "CAMERA"
    UPLOAD_IMAGE = "UPLOAD_IMAGE"
    OPTIONS_LIST = "OPTIONS_LIST"


class ActionType(str, Enum):
    RUN_BUTTON = "RUN_BUTTON"
    TIMER = "TIMER"


class OutputType(str, Enum):
    TEXT = "TEXT"
    MULTIMODAL = "MULTIMODAL"
    IMAGE_GENERATION = "IMAGE_GENERATION"


class DisplayStyle(str, Enum):
    PLAIN_TEXT = "PLAIN_TEXT"
    CAROUSEL_CARD = "CAROUSEL_CARD"


class LayoutStyle(str, Enum):
    CAMERA_INLINE = "CAMERA_INLINE"
    CAMERA_FULLSCREEN = "CAMERA_FULLSCREEN"


# Input types whose values are plain text at prompt-assembly time.
TEXT_MODALITY_INPUTS = frozenset({InputType.TEXT, InputType.OPTIONS_LIST})
IMAGE_MODALITY_INPUTS = frozenset({InputType.CAMERA, InputType.UPLOAD_IMAGE})

DEFAULT_TIMER_INTERVAL_SECONDS = 30.0

REFERENCE_OPEN = "[["
REFERENCE_CLOSE = "]]"


class SpecError(Exception):
    """Base class for spec parsing failures."""


class SpecSyntaxError(SpecError):
    """The document is not well-formed JSON."""


class SpecSchemaError(SpecError):
    """A field is missing, mistyped, or (in strict mode) unknown."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class AppInfo:
    fun_name: str
    short_description: str
    functional_description: str


@dataclass(frozen=True)
class ModelParams:
    temperature: float = 0.7
    stop_tokens: tuple[str, ...] = ()


@dataclass(frozen=True)
class InputWidget:
    id: str
    type: InputType
    description: str
    options: tuple[str, ...] = ()
    placeholder: str | None = None
    extra: tuple[tuple[str, Any], ...] = ()


@dataclass(frozen=True)
class ActionWidget:
    id: str
    type: ActionType
    interval_seconds: float | None = None
    extra: tuple[tuple[str, Any], ...] = ()


@dataclass(frozen=True)
class OutputWidget:
    id: str
    type: OutputType
    description: str
    model_instructions: str
    principles: tuple[str, ...]
    prompt: str
    triggered_by: str
    model_params: ModelParams | None = None
    display_style: DisplayStyle | None = None
    extra: tuple[tuple[str, Any], ...] = ()


@dataclass(frozen=True)
class DisplayConfig:
    font_style: str
    layout_style: LayoutStyle


@dataclass(frozen=True)
class PrototypeSpec:
    app_info: AppInfo
    inputs: tuple[InputWidget, ...]
    actions: tuple[ActionWidget, ...]
    outputs: tuple[OutputWidget, ...]
    display_config: DisplayConfig | None = None
    summary_of_changes: tuple[str, ...] | None = None
    extra: tuple[tuple[str, Any], ...] = ()

    def input_by_id(self, input_id: str) -> InputWidget | None:
        for widget in self.inputs:
            if widget.id == input_id:
                return widget
        return None

    def output_by_id(self, output_id: str) -> OutputWidget | None:
        for widget in self.outputs:
            if widget.id == output_id:
                return widget
        return None

    def action_by_id(self, action_id: str) -> ActionWidget | None:
        for widget in self.actions:
            if widget.id == action_id:
                return widget
        return None


class ViolationCode(str, Enum):
    # The eight semantic cross-widget rules.
    DUPLICATE_ID = "DUPLICATE_ID"
    UNREFERENCED_INPUT = "UNREFERENCED_INPUT"
    UNKNOWN_REFERENCE = "UNKNOWN_REFERENCE"
    OUTPUT_REFERENCES_OUTPUT = "OUTPUT_REFERENCES_OUTPUT"
    DANGLING_TRIGGER = "DANGLING_TRIGGER"
    OPTIONS_ON_NON_LIST = "OPTIONS_ON_NON_LIST"
    EMPTY_OPTIONS_LIST = "EMPTY_OPTIONS_LIST"
    TEXT_OUTPUT_IMAGE_INPUT = "TEXT_OUTPUT_IMAGE_INPUT"
    # Single-field rules checked outside the parser.
    EMPTY_FUN_NAME = "EMPTY_FUN_NAME"
    TIMER_INTERVAL = "TIMER_INTERVAL"
    TEMPERATURE_RANGE = "TEMPERATURE_RANGE"
    MALFORMED_REFERENCE = "MALFORMED_REFERENCE"


# Rules exercised by the mutation suite; each has a minimal violating spec.
SEMANTIC_RULES: tuple[ViolationCode, ...] = (
    ViolationCode.DUPLICATE_ID,
    ViolationCode.UNREFERENCED_INPUT,
    ViolationCode.UNKNOWN_REFERENCE,
    ViolationCode.OUTPUT_REFERENCES_OUTPUT,
    ViolationCode.DANGLING_TRIGGER,
    ViolationCode.OPTIONS_ON_NON_LIST,
    ViolationCode.EMPTY_OPTIONS_LIST,
    ViolationCode.TEXT_OUTPUT_IMAGE_INPUT,
)


@dataclass(frozen=True)
class SpecViolation:
    code: ViolationCode
    path: str
    message: str


@dataclass(frozen=True)
class PrincipleChange:
    added: int = 0
    revised: int = 0
    removed: int = 0


@dataclass(frozen=True)
class RevisionDiff:
    added_inputs: tuple[str, ...] = ()
    removed_inputs: tuple[str, ...] = ()
    modified_inputs: tuple[str, ...] = ()
    added_outputs: tuple[str, ...] = ()
    removed_outputs: tuple[str, ...] = ()
    modified_outputs: tuple[str, ...] = ()
    added_actions: tuple[str, ...] = ()
    removed_actions: tuple[str, ...] = ()
    app_info_changed: bool = False
    principle_changes: tuple[tuple[str, PrincipleChange], ...] = ()

    def is_empty(self) -> bool:
        return self == RevisionDiff()


# ---------------------------------------------------------------------------
# Parsing


def _expect(value: Any, kind: type, path: str) -> Any:
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise SpecSchemaError(path, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _string_list(value: Any, path: str) -> tuple[str, ...]:
    _expect(value, list, path)
    return tuple(_expect(item, str, f"{path}[{i}]") for i, item in enumerate(value))


def _enum(value: Any, enum_cls: type[Enum], path: str) -> Any:
    _expect(value, str, path)
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(member.value for member in enum_cls)
        raise SpecSchemaError(path, f"must be one of: {allowed}") from None


def _take(raw: dict[str, Any], known: set[str], path: str, strict: bool) -> tuple[tuple[str, Any], ...]:
    unknown = [key for key in raw if key not in known]
    if unknown and strict:
        raise SpecSchemaError(f"{path}.{unknown[0]}", "unknown field")
    return tuple(sorted((key, copy.deepcopy(raw[key])) for key in unknown))


def _parse_app_info(raw: Any, strict: bool) -> AppInfo:
    _expect(raw, dict, "appInfo")
    for key in ("funName", "shortDescription", "functionalDescription"):
        if key not in raw:
            raise SpecSchemaError(f"appInfo.{key}", "missing field")
    _take(raw, {"funName", "shortDescription", "functionalDescription"}, "appInfo", strict)
    return AppInfo(
        fun_name=_expect(raw["funName"], str, "appInfo.funName"),
        short_description=_expect(raw["shortDescription"], str, "appInfo.shortDescription"),
        functional_description=_expect(raw["functionalDescription"], str, "appInfo.functionalDescription"),
    )


def _parse_input(raw: Any, path: str, strict: bool) -> InputWidget:
    _expect(raw, dict, path)
    for key in ("id", "type", "description", "options"):
        if key not in raw:
            raise SpecSchemaError(f"{path}.{key}", "missing field")
    extra = _take(raw, {"id", "type", "description", "options", "placeholder"}, path, strict)
    placeholder = raw.get("placeholder")
    if placeholder is not None:
        placeholder = _expect(placeholder, str, f"{path}.placeholder")
    return InputWidget(
        id=_expect(raw["id"], str, f"{path}.id"),
        type=_enum(raw["type"], InputType, f"{path}.type"),
        description=_expect(raw["description"], str, f"{path}.description"),
        options=_string_list(raw["options"], f"{path}.options"),
        placeholder=placeholder,
        extra=extra,
    )


def _parse_action(raw: Any, path: str, strict: bool) -> ActionWidget:
    _expect(raw, dict, path)
    for key in ("id", "type"):
        if key not in raw:
            raise SpecSchemaError(f"{path}.{key}", "missing field")
    extra = _take(raw, {"id", "type", "intervalSeconds"}, path, strict)
    interval = raw.get("intervalSeconds")
    if interval is not None:
        interval = _expect(interval, float, f"{path}.intervalSeconds")
    return ActionWidget(
        id=_expect(raw["id"], str, f"{path}.id"),
        type=_enum(raw["type"], ActionType, f"{path}.type"),
        interval_seconds=interval,
        extra=extra,
    )


def _parse_model_params(raw: Any, path: str, strict: bool) -> ModelParams:
    _expect(raw, dict, path)
    for key in ("temperature", "stopTokens"):
        if key not in raw:
            raise SpecSchemaError(f"{path}.{key}", "missing field")
    _take(raw, {"temperature", "stopTokens"}, path, strict)
    return ModelParams(
        temperature=_expect(raw["temperature"], float, f"{path}.temperature"),
        stop_tokens=_string_list(raw["stopTokens"], f"{path}.stopTokens"),
    )


def _parse_output(raw: Any, path: str, strict: bool) -> OutputWidget:
    _expect(raw, dict, path)
    for key in ("id", "type", "description", "modelInstructions", "principles", "prompt", "triggeredBy"):
        if key not in raw:
            raise SpecSchemaError(f"{path}.{key}", "missing field")
    known = {"id", "type", "description", "modelInstructions", "principles", "prompt",
             "triggeredBy", "modelParams", "displayStyle"}
    extra = _take(raw, known, path, strict)
    model_params = raw.get("modelParams")
    if model_params is not None:
        model_params = _parse_model_params(model_params, f"{path}.modelParams", strict)
    display_style = raw.get("displayStyle")
    if display_style is not None:
        display_style = _enum(display_style, DisplayStyle, f"{path}.displayStyle")
    return OutputWidget(
        id=_expect(raw["id"], str, f"{path}.id"),
        type=_enum(raw["type"], OutputType, f"{path}.type"),
        description=_expect(raw["description"], str, f"{path}.description"),
        model_instructions=_expect(raw["modelInstructions"], str, f"{path}.modelInstructions"),
        principles=_string_list(raw["principles"], f"{path}.principles"),
        prompt=_expect(raw["prompt"], str, f"{path}.prompt"),
        triggered_by=_expect(raw["triggeredBy"], str, f"{path}.triggeredBy"),
        model_params=model_params,
        display_style=display_style,
        extra=extra,
    )


def _parse_display_config(raw: Any, strict: bool) -> DisplayConfig:
    path = "displayConfig"
    _expect(raw, dict, path)
    for key in ("fontStyle", "layoutStyle"):
        if key not in raw:
            raise SpecSchemaError(f"{path}.{key}", "missing field")
    _take(raw, {"fontStyle", "layoutStyle"}, path, strict)
    return DisplayConfig(
        font_style=_expect(raw["fontStyle"], str, f"{path}.fontStyle"),
        layout_style=_enum(raw["layoutStyle"], LayoutStyle, f"{path}.layoutStyle"),
    )


def parse_spec(document: str, *, strict: bool = True) -> PrototypeSpec:
    """Parse canonical-format text into a PrototypeSpec.

    Strict mode rejects unknown fields; lenient mode preserves them opaquely
    so model-generated specs carrying extra keys survive a round trip.
    Cross-widget semantics are never checked here; see validate_spec.
    """
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(str(exc)) from exc
    if not isinstance(raw, dict):
        raise SpecSchemaError("$", "top level must be an object")
    for key in ("appInfo", "inputs", "actions", "outputs"):
        if key not in raw:
            raise SpecSchemaError(key, "missing field")
    known = {"appInfo", "summaryOfChanges", "inputs", "actions", "outputs", "displayConfig"}
    extra = _take(raw, known, "$", strict)
    summary = raw.get("summaryOfChanges")
    if summary is not None:
        summary = _string_list(summary, "summaryOfChanges")
    display_config = raw.get("displayConfig")
    if display_config is not None:
        display_config = _parse_display_config(display_config, strict)
    _expect(raw["inputs"], list, "inputs")
    _expect(raw["actions"], list, "actions")
    _expect(raw["outputs"], list, "outputs")
    return PrototypeSpec(
        app_info=_parse_app_info(raw["appInfo"], strict),
        inputs=tuple(_parse_input(item, f"inputs[{i}]", strict) for i, item in enumerate(raw["inputs"])),
        actions=tuple(_parse_action(item, f"actions[{i}]", strict) for i, item in enumerate(raw["actions"])),
        outputs=tuple(_parse_output(item, f"outputs[{i}]", strict) for i, item in enumerate(raw["outputs"])),
        display_config=display_config,
        summary_of_changes=summary,
        extra=extra,
    )


# ---------------------------------------------------------------------------
# Serialization


def _number(value: float) -> Any:
    return int(value) if float(value).is_integer() else value


def _input_to_dict(widget: InputWidget) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": widget.id,
        "type": widget.type.value,
        "description": widget.description,
        "options": list(widget.options),
    }
    if widget.placeholder is not None:
        out["placeholder"] = widget.placeholder
    out.update(widget.extra)
    return out


def _action_to_dict(widget: ActionWidget) -> dict[str, Any]:
    out: dict[str, Any] = {"id": widget.id, "type": widget.type.value}
    if widget.interval_seconds is not None:
        out["intervalSeconds"] = _number(widget.interval_seconds)
    out.update(widget.extra)
    return out


def _output_to_dict(widget: OutputWidget) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": widget.id,
        "type": widget.type.value,
        "description": widget.description,
        "modelInstructions": widget.model_instructions,
        "principles": list(widget.principles),
        "prompt": widget.prompt,
        "triggeredBy": widget.triggered_by,
    }
    if widget.model_params is not None:
        out["modelParams"] = {
            "temperature": _number(widget.model_params.temperature),
            "stopTokens": list(widget.model_params.stop_tokens),
        }
    if widget.display_style is not None:
        out["displayStyle"] = widget.display_style.value
    out.update(widget.extra)
    return out


def spec_to_dict(spec: PrototypeSpec) -> dict[str, Any]:
    """Plain-dict form of a spec in canonical key order."""
    out: dict[str, Any] = {
        "appInfo": {
            "funName": spec.app_info.fun_name,
            "shortDescription": spec.app_info.short_description,
            "functionalDescription": spec.app_info.functional_description,
        }
    }
    if spec.summary_of_changes is not None:
        out["summaryOfChanges"] = list(spec.summary_of_changes)
    out["inputs"] = [_input_to_dict(w) for w in spec.inputs]
    out["actions"] = [_action_to_dict(w) for w in spec.actions]
    out["outputs"] = [_output_to_dict(w) for w in spec.outputs]
    if spec.display_config is not None:
        out["displayConfig"] = {
            "fontStyle": spec.display_config.font_style,
            "layoutStyle": spec.display_config.layout_style.value,
        }
    out.update(spec.extra)
    return out


def serialize_spec(spec: PrototypeSpec) -> str:
    """Deterministic canonical-format text; byte-stable for equal specs."""
    return json.dumps(spec_to_dict(spec), indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Reference extraction (shared with the prompt engine)


def extract_references(template: str) -> list[str]:
    """Input ids referenced by a template, first-occurrence order, deduplicated.

    A reference is a maximal ``[[`` ... ``]]`` span; an unclosed ``[[`` ends
    scanning (validate_spec reports it as MALFORMED_REFERENCE).
    """
    seen: list[str] = []
    pos = 0
    while True:
        start = template.find(REFERENCE_OPEN, pos)
        if start == -1:
            break
        end = template.find(REFERENCE_CLOSE, start + len(REFERENCE_OPEN))
        if end == -1:
            break
        ref = template[start + len(REFERENCE_OPEN):end]
        if ref not in seen:
            seen.append(ref)
        pos = end + len(REFERENCE_CLOSE)
    return seen


def _has_malformed_reference(template: str) -> bool:
    pos = 0
    while True:
        start = template.find(REFERENCE_OPEN, pos)
        if start == -1:
            return False
        end = template.find(REFERENCE_CLOSE, start + len(REFERENCE_OPEN))
        if end == -1:
            return True
        pos = end + len(REFERENCE_CLOSE)


# ---------------------------------------------------------------------------
# Validation


def validate_spec(spec: PrototypeSpec) -> list[SpecViolation]:
    """Check every semantic rule; violations are data, never exceptions.

    Result is stable-ordered by (code, path).
    """
    violations: list[SpecViolation] = []

    def flag(code: ViolationCode, path: str, message: str) -> None:
        violations.append(SpecViolation(code, path, message))

    input_ids = {w.id for w in spec.inputs}
    output_ids = {w.id for w in spec.outputs}
    action_ids = {w.id for w in spec.actions}

    seen: set[str] = set()
    for widget_id in [w.id for w in spec.inputs] + [w.id for w in spec.actions] + [w.id for w in spec.outputs]:
        if widget_id in seen:
            flag(ViolationCode.DUPLICATE_ID, widget_id, "widget id is not unique")
        seen.add(widget_id)

    if not spec.app_info.fun_name:
        flag(ViolationCode.EMPTY_FUN_NAME, "appInfo.funName", "funName must be non-empty")

    for widget in spec.inputs:
        if widget.type is InputType.OPTIONS_LIST:
            if not widget.options:
                flag(ViolationCode.EMPTY_OPTIONS_LIST, widget.id,
                     "OPTIONS_LIST inputs need at least one option")
        elif widget.options:
            flag(ViolationCode.OPTIONS_ON_NON_LIST, widget.id,
                 "options are only allowed on OPTIONS_LIST inputs")

    for widget in spec.actions:
        if (widget.type is ActionType.TIMER) != (widget.interval_seconds is not None):
            flag(ViolationCode.TIMER_INTERVAL, widget.id,
                 "intervalSeconds is required exactly when type is TIMER")
        elif widget.interval_seconds is not None and widget.interval_seconds <= 0:
            flag(ViolationCode.TIMER_INTERVAL, widget.id, "intervalSeconds must be positive")

    referenced: set[str] = set()
    for widget in spec.outputs:
        if widget.triggered_by not in action_ids:
            flag(ViolationCode.DANGLING_TRIGGER, widget.id,
                 f"triggeredBy '{widget.triggered_by}' is not an action id")
        if _has_malformed_reference(widget.prompt):
            flag(ViolationCode.MALFORMED_REFERENCE, widget.id,
                 "prompt contains an unclosed [[ reference")
        if widget.model_params is not None and not 0 <= widget.model_params.temperature <= 2:
            flag(ViolationCode.TEMPERATURE_RANGE, widget.id,
                 "temperature must be in [0, 2]")
        for ref in extract_references(widget.prompt):
            if ref in output_ids:
                flag(ViolationCode.OUTPUT_REFERENCES_OUTPUT, widget.id,
                     f"prompt references output '{ref}'; outputs may only reference inputs")
            elif ref not in input_ids:
                flag(ViolationCode.UNKNOWN_REFERENCE, widget.id,
                     f"prompt references unknown input '{ref}'")
            else:
                referenced.add(ref)
                if widget.type is OutputType.TEXT:
                    target = spec.input_by_id(ref)
                    if target is not None and target.type not in TEXT_MODALITY_INPUTS:
                        flag(ViolationCode.TEXT_OUTPUT_IMAGE_INPUT, widget.id,
                             f"TEXT output references image input '{ref}'")

    for widget in spec.inputs:
        if widget.id not in referenced:
            flag(ViolationCode.UNREFERENCED_INPUT, widget.id,
                 "input is not referenced by any output prompt")

    violations.sort(key=lambda v: (v.code.value, v.path))
    return violations


# ---------------------------------------------------------------------------
# Diff


def _principle_change(before: tuple[str, ...], after: tuple[str, ...]) -> PrincipleChange:
    added = revised = removed = 0
    matcher = difflib.SequenceMatcher(a=before, b=after, autojunk=False)
    for op, i1, i2, j1, j2 in matcher.get_opcodes():
        if op == "insert":
            added += j2 - j1
        elif op == "delete":
            removed += i2 - i1
        elif op == "replace":
            old, new = i2 - i1, j2 - j1
            revised += min(old, new)
            added += max(0, new - old)
            removed += max(0, old - new)
    return PrincipleChange(added=added, revised=revised, removed=removed)


def diff_specs(before: PrototypeSpec, after: PrototypeSpec) -> RevisionDiff:
    """Structural diff keyed by widget id; the deterministic complement to a
    model-written change summary."""

    def split(before_widgets, after_widgets, to_dict):
        before_map = {w.id: w for w in before_widgets}
        after_map = {w.id: w for w in after_widgets}
        added = tuple(w.id for w in after_widgets if w.id not in before_map)
        removed = tuple(w.id for w in before_widgets if w.id not in after_map)
        modified = tuple(
            w.id for w in after_widgets
            if w.id in before_map and to_dict(before_map[w.id]) != to_dict(w)
        )
        return added, removed, modified

    added_in, removed_in, modified_in = split(before.inputs, after.inputs, _input_to_dict)
    added_out, removed_out, modified_out = split(before.outputs, after.outputs, _output_to_dict)
    added_act, removed_act, _ = split(before.actions, after.actions, _action_to_dict)

    before_outputs = {w.id: w for w in before.outputs}
    principle_changes = []
    for widget in after.outputs:
        prior = before_outputs.get(widget.id)
        if prior is None:
            continue
        change = _principle_change(prior.principles, widget.principles)
        if change != PrincipleChange():
            principle_changes.append((widget.id, change))

    return RevisionDiff(
        added_inputs=added_in,
        removed_inputs=removed_in,
        modified_inputs=modified_in,
        added_outputs=added_out,
        removed_outputs=removed_out,
        modified_outputs=modified_out,
        added_actions=added_act,
        removed_actions=removed_act,
        app_info_changed=before.app_info != after.app_info,
        principle_changes=tuple(principle_changes),
    )


def diff_to_dict(diff: RevisionDiff) -> dict[str, Any]:
    return {
        "addedInputs": list(diff.added_inputs),
        "removedInputs": list(diff.removed_inputs),
        "modifiedInputs": list(diff.modified_inputs),
        "addedOutputs": list(diff.added_outputs),
        "removedOutputs": list(diff.removed_outputs),
        "modifiedOutputs": list(diff.modified_outputs),
        "addedActions": list(diff.added_actions),
        "removedActions": list(diff.removed_actions),
        "appInfoChanged": diff.app_info_changed,
        "principleChanges": {
            output_id: {"added": c.added, "revised": c.revised, "removed": c.removed}
            for output_id, c in diff.principle_changes
        },
    }


# ---------------------------------------------------------------------------
# Fork


def fork_spec(spec: PrototypeSpec, new_name: str | None = None) -> PrototypeSpec:
    """Deep copy for remixing: optional rename, change summary cleared.

    Store-level identity (prototype id, share token) is assigned on save.
    """
    app_info = spec.app_info
    if new_name is not None:
        app_info = AppInfo(
            fun_name=new_name,
            short_description=app_info.short_description,
            functional_description=app_info.functional_description,
        )
    return PrototypeSpec(
        app_info=app_info,
        inputs=spec.inputs,
        actions=spec.actions,
        outputs=spec.outputs,
        display_config=spec.display_config,
        summary_of_changes=None,
        extra=spec.extra,
    )
