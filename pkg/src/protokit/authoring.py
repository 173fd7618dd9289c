"""Natural-language authoring pipelines: prototype creation from an idea,
request classification, principle-level revision ops, and whole-structure
revision with change summaries.

The meta-prompts ship as editable text assets under ``templates/``; operators
may override them per deployment via ``load_template(..., override_dir=...)``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path

from .gateway import ModelGateway, ModelRequest
from .model import (
    ModelParams,
    OutputType,
    OutputWidget,
    PrototypeSpec,
    RevisionDiff,
    SpecError,
    SpecViolation,
    diff_specs,
    parse_spec,
    serialize_spec,
    validate_spec,
)
from .prompting import PromptPart

# Pipeline calls pin temperature 0 so replay transcripts stay deterministic.
PIPELINE_PARAMS = ModelParams(temperature=0.0, stop_tokens=())

PLACEHOLDER_MARKERS = {
    "USER_INPUT": "PLACEHOLDER FOR USER INPUT",
    "CURRENT_PRINCIPLES": "PLACEHOLDER FOR CURRENT PROMPT PRINCIPLES",
    "CURRENT_PROTOTYPE": "PLACEHOLDER FOR CURRENT PROTOTYPE JSON",
}


class TemplateName(str, Enum):
    CREATION = "CREATION"
    CLASSIFIER = "CLASSIFIER"
    PRINCIPLE_REVISION = "PRINCIPLE_REVISION"
    STRUCTURE_REVISION = "STRUCTURE_REVISION"


_TEMPLATE_FILES = {
    TemplateName.CREATION: "creation.txt",
    TemplateName.CLASSIFIER: "classifier.txt",
    TemplateName.PRINCIPLE_REVISION: "principle_revision.txt",
    TemplateName.STRUCTURE_REVISION: "structure_revision.txt",
}

_REQUIRED_PLACEHOLDERS = {
    TemplateName.CREATION: frozenset({"USER_INPUT"}),
    TemplateName.CLASSIFIER: frozenset({"USER_INPUT"}),
    TemplateName.PRINCIPLE_REVISION: frozenset({"USER_INPUT", "CURRENT_PRINCIPLES"}),
    TemplateName.STRUCTURE_REVISION: frozenset({"USER_INPUT", "CURRENT_PROTOTYPE"}),
}


class RouteType(str, Enum):
    REVISE_PROTOTYPE_STRUCTURE = "REVISE_PROTOTYPE_STRUCTURE"
    REVISE_PRINCIPLES = "REVISE_PRINCIPLES"


class OpType(str, Enum):
    ADD_TO_PROMPT = "ADD_TO_PROMPT"
    REVISE_PROMPT = "REVISE_PROMPT"
    REMOVE_FROM_PROMPT = "REMOVE_FROM_PROMPT"


@dataclass(frozen=True)
class MetaPromptTemplate:
    name: TemplateName
    body: str

    def __post_init__(self) -> None:
        required = _REQUIRED_PLACEHOLDERS[self.name]
        for key, marker in PLACEHOLDER_MARKERS.items():
            present = marker in self.body
            if key in required and not present:
                raise ValueError(f"{self.name.value} template is missing marker '{marker}'")
            if key not in required and present:
                raise ValueError(f"{self.name.value} template must not contain marker '{marker}'")


@dataclass(frozen=True)
class RevisionRoute:
    thought: str
    op_type: RouteType


@dataclass(frozen=True)
class RevisionOp:
    op_type: OpType
    principle: str | None = None
    index: int | None = None
    thought: str = ""

    def __post_init__(self) -> None:
        if self.op_type in (OpType.ADD_TO_PROMPT, OpType.REVISE_PROMPT) and self.principle is None:
            raise ValueError(f"{self.op_type.value} requires a principle")
        if self.op_type in (OpType.REVISE_PROMPT, OpType.REMOVE_FROM_PROMPT) and self.index is None:
            raise ValueError(f"{self.op_type.value} requires an index")


@dataclass(frozen=True)
class RevisionOutcome:
    revised_spec: PrototypeSpec
    summary_of_changes: tuple[str, ...]
    route: RevisionRoute
    structural_diff: RevisionDiff


class AuthoringError(Exception):
    pass


class MissingBindingError(AuthoringError):
    def __init__(self, name: str):
        super().__init__(f"no binding supplied for placeholder {name}")
        self.placeholder = name


class NoConfigFoundError(AuthoringError):
    pass


class InvalidGeneratedSpecError(AuthoringError):
    def __init__(self, violations: list[SpecViolation] | None = None, message: str = ""):
        detail = message or "; ".join(f"{v.code.value}@{v.path}" for v in violations or [])
        super().__init__(f"generated spec is invalid after repair: {detail}")
        self.violations = violations or []


class MissingSummaryError(AuthoringError):
    pass


class UnparseableRouteError(AuthoringError):
    pass


class UnparseableOpError(AuthoringError):
    pass


class IndexOutOfBoundsError(AuthoringError):
    def __init__(self, index: int, length: int):
        super().__init__(f"index {index} out of bounds for {length} principles")
        self.index = index
        self.length = length


def load_template(name: TemplateName, override_dir: str | Path | None = None) -> MetaPromptTemplate:
    filename = _TEMPLATE_FILES[name]
    if override_dir is not None:
        override = Path(override_dir) / filename
        if override.exists():
            return MetaPromptTemplate(name, override.read_text(encoding="utf-8"))
    body = resources.files("protokit.templates").joinpath(filename).read_text(encoding="utf-8")
    return MetaPromptTemplate(name, body)


def build_meta_prompt(template: MetaPromptTemplate, bindings: dict[str, str]) -> str:
    """Byte-exact placeholder substitution; every required marker filled."""
    text = template.body
    for key in _REQUIRED_PLACEHOLDERS[template.name]:
        if key not in bindings:
            raise MissingBindingError(key)
        text = text.replace(PLACEHOLDER_MARKERS[key], bindings[key])
    if "PLACEHOLDER FOR" in text:
        raise MissingBindingError("unbound placeholder remains in template")
    return text


def extract_config(model_text: str) -> str:
    """First maximal balanced top-level JSON object in model output.

    Models wrap configs in prose and code fences; both are stripped.
    """
    text = re.sub(r"```[a-zA-Z]*\n?", "", model_text)
    start = text.find("{")
    if start == -1:
        raise NoConfigFoundError("no object found in model output")
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start:i + 1]
    raise NoConfigFoundError("unbalanced object in model output")


_BARE_KEY = re.compile(r'([,{]\s*)([A-Za-z_][A-Za-z0-9_]*)(\s*:)')


def _parse_result_object(text: str) -> dict:
    """json.loads with a fallback that quotes bare keys (the classifier and
    op meta-prompts show ``index:`` unquoted)."""
    snippet = extract_config(text)
    try:
        return json.loads(snippet)
    except json.JSONDecodeError:
        pass
    fixed = _BARE_KEY.sub(r'\1"\2"\3', snippet)
    return json.loads(fixed)


def _call_text(gateway: ModelGateway, prompt: str, tag: str) -> str:
    response = gateway.generate(ModelRequest(
        model_kind=OutputType.TEXT,
        parts=(PromptPart.text(prompt),),
        params=PIPELINE_PARAMS,
        request_tag=tag,
    ))
    return response.text or ""


def _repair_prompt(base_prompt: str, config_text: str, problems: list[str], resume_header: str) -> str:
    bullets = "\n".join(f"- {p}" for p in problems)
    return (
        f"{base_prompt}{config_text}\n\n"
        f"The configuration above violates these rules:\n{bullets}\n\n"
        f"Produce a corrected configuration.\n\n{resume_header}\n"
    )


def create_from_idea(
    idea: str,
    gateway: ModelGateway,
    template_dir: str | Path | None = None,
) -> PrototypeSpec:
    """Bootstrap a prototype from a brief idea sketch; one repair round on
    validation failure."""
    if not idea.strip():
        raise ValueError("idea must be non-empty")
    template = load_template(TemplateName.CREATION, template_dir)
    prompt = build_meta_prompt(template, {"USER_INPUT": idea})
    config_text = extract_config(_call_text(gateway, prompt, "nl-create"))
    try:
        spec = parse_spec(config_text, strict=False)
        violations = validate_spec(spec)
    except SpecError as exc:
        spec, violations = None, [str(exc)]  # type: ignore[list-item]
    if spec is not None and not violations:
        return spec
    problems = [f"{v.code.value}: {v.message} ({v.path})" for v in violations] \
        if spec is not None else [str(v) for v in violations]
    repair = _repair_prompt(prompt, config_text, problems, "PROTOTYPE CONFIG:")
    config_text = extract_config(_call_text(gateway, repair, "nl-create-repair"))
    try:
        spec = parse_spec(config_text, strict=False)
    except SpecError as exc:
        raise InvalidGeneratedSpecError(message=str(exc)) from exc
    violations = validate_spec(spec)
    if violations:
        raise InvalidGeneratedSpecError(violations)
    return spec


def classify_revision(
    request: str,
    gateway: ModelGateway,
    template_dir: str | Path | None = None,
) -> RevisionRoute:
    if not request.strip():
        raise ValueError("request must be non-empty")
    template = load_template(TemplateName.CLASSIFIER, template_dir)
    prompt = build_meta_prompt(template, {"USER_INPUT": request})
    raw = _call_text(gateway, prompt, "nl-classify")
    try:
        obj = _parse_result_object(raw)
        return RevisionRoute(thought=str(obj.get("thought", "")), op_type=RouteType(obj["op_type"]))
    except (NoConfigFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UnparseableRouteError(f"cannot parse route from model output: {exc}") from exc


def principles_binding(principles: tuple[str, ...] | list[str]) -> str:
    """Wire form of a principles list as shown in the revision meta-prompt."""
    return json.dumps({"principles": list(principles)}, ensure_ascii=False)


def propose_principle_op(
    request: str,
    principles: tuple[str, ...] | list[str],
    gateway: ModelGateway,
    template_dir: str | Path | None = None,
) -> RevisionOp:
    template = load_template(TemplateName.PRINCIPLE_REVISION, template_dir)
    prompt = build_meta_prompt(template, {
        "USER_INPUT": request,
        "CURRENT_PRINCIPLES": principles_binding(principles),
    })
    raw = _call_text(gateway, prompt, "nl-principle-op")
    try:
        obj = _parse_result_object(raw)
        op_body = obj.get("op", {})
        op = RevisionOp(
            op_type=OpType(obj["op_type"]),
            principle=op_body.get("principle"),
            index=op_body.get("index"),
            thought=str(obj.get("thought", "")),
        )
    except (NoConfigFoundError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise UnparseableOpError(f"cannot parse operation from model output: {exc}") from exc
    _check_bounds(op, len(principles))
    return op


def _check_bounds(op: RevisionOp, length: int) -> None:
    if op.index is None:
        return
    limit = length + 1 if op.op_type is OpType.ADD_TO_PROMPT else length
    if not 0 <= op.index < limit:
        raise IndexOutOfBoundsError(op.index, length)


def apply_revision_op(widget: OutputWidget, op: RevisionOp) -> OutputWidget:
    """Apply one atomic principles-list edit; all other fields unchanged."""
    _check_bounds(op, len(widget.principles))
    principles = list(widget.principles)
    if op.op_type is OpType.ADD_TO_PROMPT:
        if op.index is None:
            principles.append(op.principle)
        else:
            principles.insert(op.index, op.principle)
    elif op.op_type is OpType.REVISE_PROMPT:
        principles[op.index] = op.principle
    else:
        del principles[op.index]
    return replace(widget, principles=tuple(principles))


def _preserved_principles(before: PrototypeSpec, after: PrototypeSpec) -> list[str]:
    """Surviving outputs must keep their existing principles as a prefix
    (new ones may only be appended)."""
    problems = []
    after_outputs = {w.id: w for w in after.outputs}
    for widget in before.outputs:
        revised = after_outputs.get(widget.id)
        if revised is None:
            continue
        if revised.principles[:len(widget.principles)] != widget.principles:
            problems.append(
                f"output '{widget.id}' must keep its existing principles unchanged; "
                "only append new ones"
            )
    return problems


def revise_structure(
    spec: PrototypeSpec,
    request: str,
    gateway: ModelGateway,
    template_dir: str | Path | None = None,
) -> PrototypeSpec:
    """Whole-prototype rewrite from an NL request; the result must carry a
    summaryOfChanges and preserve surviving outputs' principles."""
    if not request.strip():
        raise ValueError("request must be non-empty")
    template = load_template(TemplateName.STRUCTURE_REVISION, template_dir)
    prompt = build_meta_prompt(template, {
        "USER_INPUT": request,
        "CURRENT_PROTOTYPE": serialize_spec(spec),
    })

    def attempt(text: str) -> tuple[PrototypeSpec | None, list[str], str]:
        config_text = extract_config(text)
        try:
            revised = parse_spec(config_text, strict=False)
        except SpecError as exc:
            return None, [str(exc)], config_text
        problems = [f"{v.code.value}: {v.message} ({v.path})" for v in validate_spec(revised)]
        if not revised.summary_of_changes:
            problems.append('the revised config must include a non-empty "summaryOfChanges" list')
        problems.extend(_preserved_principles(spec, revised))
        return revised, problems, config_text

    revised, problems, config_text = attempt(_call_text(gateway, prompt, "nl-revise-structure"))
    if revised is not None and not problems:
        return revised
    repair = _repair_prompt(prompt, config_text, problems, "REVISED PROTOTYPE CONFIG:")
    revised, problems, _ = attempt(_call_text(gateway, repair, "nl-revise-structure-repair"))
    if revised is None:
        raise InvalidGeneratedSpecError(message="; ".join(problems))
    if problems:
        if not revised.summary_of_changes:
            raise MissingSummaryError("revised spec lacks summaryOfChanges after repair")
        raise InvalidGeneratedSpecError(message="; ".join(problems))
    return revised


def _principle_summary(op: RevisionOp) -> str:
    if op.op_type is OpType.ADD_TO_PROMPT:
        return f"Add principle: {op.principle}"
    if op.op_type is OpType.REVISE_PROMPT:
        return f"Revise principle {op.index + 1}: {op.principle}"
    return f"Remove principle {op.index + 1}"


def revise(
    spec: PrototypeSpec,
    request: str,
    gateway: ModelGateway,
    target_output_id: str | None = None,
    template_dir: str | Path | None = None,
) -> RevisionOutcome:
    """End-to-end NL revision: classify, then either edit one output's
    principles or rewrite the structure. Never mutates the input spec."""
    if not request.strip():
        raise ValueError("request must be non-empty")
    route = classify_revision(request, gateway, template_dir)
    if route.op_type is RouteType.REVISE_PRINCIPLES:
        target = _pick_target(spec, target_output_id)
        op = propose_principle_op(request, target.principles, gateway, template_dir)
        revised_widget = apply_revision_op(target, op)
        summary = (_principle_summary(op),)
        revised = replace(
            spec,
            outputs=tuple(revised_widget if w.id == target.id else w for w in spec.outputs),
            summary_of_changes=summary,
        )
    else:
        revised = revise_structure(spec, request, gateway, template_dir)
        summary = tuple(revised.summary_of_changes or ())
    return RevisionOutcome(
        revised_spec=revised,
        summary_of_changes=summary,
        route=route,
        structural_diff=diff_specs(spec, revised),
    )


def _pick_target(spec: PrototypeSpec, target_output_id: str | None) -> OutputWidget:
    if target_output_id is not None:
        widget = spec.output_by_id(target_output_id)
        if widget is None:
            raise ValueError(f"no output widget '{target_output_id}'")
        return widget
    if len(spec.outputs) == 1:
        return spec.outputs[0]
    raise ValueError("multiple output widgets; a target output id is required")
