"""protokit: a deterministic prototype-spec engine, NL authoring pipelines,
and a self-hostable service for mobile AI prototyping."""

from .model import (
    ActionType,
    ActionWidget,
    AppInfo,
    DisplayConfig,
    DisplayStyle,
    InputType,
    InputWidget,
    LayoutStyle,
    ModelParams,
    OutputType,
    OutputWidget,
    PrototypeSpec,
    RevisionDiff,
    SpecError,
    SpecSchemaError,
    SpecSyntaxError,
    SpecViolation,
    ViolationCode,
    diff_specs,
    fork_spec,
    parse_spec,
    serialize_spec,
    validate_spec,
)
from .prompting import (
    AssembledPrompt,
    InputValue,
    OutputResult,
    apply_stop_tokens,
    assemble_prompt,
    extract_references,
    run_output,
)

__version__ = "0.1.0"

__all__ = [
    "ActionType",
    "ActionWidget",
    "AppInfo",
    "AssembledPrompt",
    "DisplayConfig",
    "DisplayStyle",
    "InputType",
    "InputValue",
    "InputWidget",
    "LayoutStyle",
    "ModelParams",
    "OutputResult",
    "OutputType",
    "OutputWidget",
    "PrototypeSpec",
    "RevisionDiff",
    "SpecError",
    "SpecSchemaError",
    "SpecSyntaxError",
    "SpecViolation",
    "ViolationCode",
    "apply_stop_tokens",
    "assemble_prompt",
    "diff_specs",
    "extract_references",
    "fork_spec",
    "parse_spec",
    "run_output",
    "serialize_spec",
    "validate_spec",
]
