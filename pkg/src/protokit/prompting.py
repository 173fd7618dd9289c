"""Prompt assembly: resolve input references, build multimodal prompt parts,
and post-process model text with stop tokens."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import (
    IMAGE_MODALITY_INPUTS,
    InputType,
    ModelParams,
    OutputType,
    OutputWidget,
    PrototypeSpec,
    extract_references,
)

__all__ = [
    "AssembledPrompt",
    "AssemblyError",
    "InputValue",
    "MissingInputError",
    "ModalityMismatchError",
    "OutputResult",
    "PartKind",
    "PromptPart",
    "apply_stop_tokens",
    "assemble_prompt",
    "extract_references",
    "run_output",
]

DEFAULT_MODEL_PARAMS = ModelParams(temperature=0.7, stop_tokens=())


class PartKind(str, Enum):
    TEXT_PART = "TEXT_PART"
    IMAGE_PART = "IMAGE_PART"


@dataclass(frozen=True)
class PromptPart:
    kind: PartKind
    value: str  # text content, or a content-addressed blob id

    @classmethod
    def text(cls, value: str) -> "PromptPart":
        return cls(PartKind.TEXT_PART, value)

    @classmethod
    def image(cls, blob_id: str) -> "PromptPart":
        return cls(PartKind.IMAGE_PART, blob_id)


@dataclass(frozen=True)
class InputValue:
    """One user-provided value; exactly one payload field is set."""

    input_id: str
    text: str | None = None
    image_ref: str | None = None
    selected_option: str | None = None

    def __post_init__(self) -> None:
        payloads = [self.text, self.image_ref, self.selected_option]
        if sum(p is not None for p in payloads) != 1:
            raise ValueError(f"InputValue for '{self.input_id}' needs exactly one payload")

    @property
    def is_image(self) -> bool:
        return self.image_ref is not None

    @property
    def as_text(self) -> str:
        if self.text is not None:
            return self.text
        if self.selected_option is not None:
            return self.selected_option
        raise ValueError("image payloads have no text form")


@dataclass(frozen=True)
class AssembledPrompt:
    parts: tuple[PromptPart, ...]
    model_kind: OutputType
    params: ModelParams


@dataclass(frozen=True)
class OutputResult:
    output_id: str
    text: str | None = None
    image_ref: str | None = None
    raw_model_text: str | None = None

    @property
    def kind(self) -> OutputType:
        return OutputType.IMAGE_GENERATION if self.image_ref is not None else OutputType.TEXT


class AssemblyError(Exception):
    pass


class MissingInputError(AssemblyError):
    def __init__(self, input_id: str):
        super().__init__(f"no value supplied for referenced input '{input_id}'")
        self.input_id = input_id


class ModalityMismatchError(AssemblyError):
    def __init__(self, input_id: str, message: str):
        super().__init__(f"{input_id}: {message}")
        self.input_id = input_id


def _check_modality(value: InputValue, widget_type: InputType, options: tuple[str, ...]) -> None:
    if widget_type is InputType.TEXT and value.text is None:
        raise ModalityMismatchError(value.input_id, "TEXT inputs take a text payload")
    if widget_type is InputType.OPTIONS_LIST:
        if value.selected_option is None:
            raise ModalityMismatchError(value.input_id, "OPTIONS_LIST inputs take a selectedOption payload")
        if value.selected_option not in options:
            raise ModalityMismatchError(value.input_id, f"'{value.selected_option}' is not a configured option")
    if widget_type in IMAGE_MODALITY_INPUTS and value.image_ref is None:
        raise ModalityMismatchError(value.input_id, "image inputs take an imageRef payload")


def assemble_prompt(
    output: OutputWidget,
    values: list[InputValue],
    spec: PrototypeSpec,
) -> AssembledPrompt:
    """Merge the output widget's prompt sections with user input values.

    Parts start with the model instructions and principles (one per line),
    then the template with text values substituted in place; every image
    reference becomes an IMAGE_PART at its template position, splitting the
    surrounding text. Demands a pre-validated spec: unresolvable references
    are a validation concern, not an assembly crash.
    """
    by_id = {v.input_id: v for v in values}
    references = extract_references(output.prompt)
    for ref in references:
        if ref not in by_id:
            raise MissingInputError(ref)
        widget = spec.input_by_id(ref)
        if widget is not None:
            _check_modality(by_id[ref], widget.type, widget.options)
        if output.type is OutputType.TEXT and by_id[ref].is_image:
            raise ModalityMismatchError(ref, "TEXT outputs cannot take image inputs")

    sections = [output.model_instructions, *output.principles]
    prefix = "\n".join(sections) + "\n" if sections else ""

    parts: list[PromptPart] = []
    buffer = prefix
    template = output.prompt
    pos = 0
    while True:
        start = template.find("[[", pos)
        if start == -1:
            break
        end = template.find("]]", start + 2)
        if end == -1:
            break
        ref = template[start + 2:end]
        value = by_id.get(ref)
        buffer += template[pos:start]
        if value is not None and value.is_image:
            if buffer:
                parts.append(PromptPart.text(buffer))
                buffer = ""
            parts.append(PromptPart.image(value.image_ref))
        elif value is not None:
            buffer += value.as_text
        else:
            # Unreached in validated specs; malformed spans stay verbatim.
            buffer += template[start:end + 2]
        pos = end + 2
    buffer += template[pos:]
    if buffer or not parts:
        parts.append(PromptPart.text(buffer))

    return AssembledPrompt(
        parts=tuple(parts),
        model_kind=output.type,
        params=output.model_params or DEFAULT_MODEL_PARAMS,
    )


def apply_stop_tokens(raw_text: str, params: ModelParams) -> str:
    """Prefix of raw_text before the earliest stop-token occurrence."""
    cut = len(raw_text)
    for token in params.stop_tokens:
        if not token:
            continue
        index = raw_text.find(token)
        if index != -1:
            cut = min(cut, index)
    return raw_text[:cut]


def run_output(
    output: OutputWidget,
    values: list[InputValue],
    spec: PrototypeSpec,
    gateway,
) -> OutputResult:
    """Assemble, dispatch to the gateway backend for the widget's model kind,
    and apply stop-token post-processing to text results."""
    from .gateway import ModelRequest

    prompt = assemble_prompt(output, values, spec)
    response = gateway.generate(ModelRequest(
        model_kind=prompt.model_kind,
        parts=prompt.parts,
        params=prompt.params,
        request_tag=output.id,
    ))
    if output.type is OutputType.IMAGE_GENERATION:
        return OutputResult(output_id=output.id, image_ref=response.image_ref)
    text = apply_stop_tokens(response.text or "", prompt.params)
    return OutputResult(output_id=output.id, text=text, raw_model_text=response.text)
