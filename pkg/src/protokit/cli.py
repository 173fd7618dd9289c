"""Operator/developer command line: validate and diff specs, drive the NL
pipelines against replay transcripts, run prototypes headlessly, serve the
HTTP API.

Exit codes: 0 ok, 1 read/parse failure, 2 validation, 3 transcript miss,
4 backend error. stdout carries machine-parseable output only; diagnostics
go to stderr.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import authoring
from .authoring import AuthoringError, InvalidGeneratedSpecError, NoConfigFoundError
from .gateway import (
    BackendUnavailableError,
    HttpGateway,
    ModelGateway,
    ModelRefusalError,
    ReplayGateway,
    TranscriptIOError,
    TranscriptMissError,
)
from .model import (
    SpecError,
    diff_specs,
    diff_to_dict,
    parse_spec,
    serialize_spec,
    validate_spec,
)
from .prompting import InputValue, run_output
from .store import SessionStore

EXIT_OK = 0
EXIT_READ = 1
EXIT_VALIDATION = 2
EXIT_TRANSCRIPT_MISS = 3
EXIT_BACKEND = 4


def _fail(code: int, message: str) -> "click.exceptions.Exit":
    click.echo(message, err=True)
    sys.exit(code)


def _read_spec(path: str, *, strict: bool = True):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(EXIT_READ, f"cannot read {path}: {exc}")
    try:
        return parse_spec(text, strict=strict)
    except SpecError as exc:
        _fail(EXIT_READ, f"cannot parse {path}: {exc}")


def _make_gateway(transcript: str | None, live: bool) -> ModelGateway:
    if live:
        if not os.environ.get("MODEL_API_KEY"):
            _fail(EXIT_BACKEND, "--live requires MODEL_API_KEY")
        return HttpGateway()
    if transcript is None:
        _fail(EXIT_READ, "a --transcript file is required unless --live is given")
    try:
        return ReplayGateway(transcript)
    except TranscriptIOError as exc:
        _fail(EXIT_READ, str(exc))


def _run_pipeline(fn):
    try:
        return fn()
    except TranscriptMissError as exc:
        _fail(EXIT_TRANSCRIPT_MISS, str(exc))
    except (BackendUnavailableError, ModelRefusalError) as exc:
        _fail(EXIT_BACKEND, str(exc))
    except (InvalidGeneratedSpecError,) as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (NoConfigFoundError, AuthoringError) as exc:
        _fail(EXIT_BACKEND, str(exc))


@click.group()
def main() -> None:
    """Prototype-spec engine and NL authoring toolkit."""


@main.command()
@click.argument("spec_file", type=click.Path())
@click.option("--lenient", is_flag=True, help="Preserve unknown fields instead of rejecting them.")
def validate(spec_file: str, lenient: bool) -> None:
    """Validate a spec file; print violations as code<TAB>path<TAB>message."""
    spec = _read_spec(spec_file, strict=not lenient)
    violations = validate_spec(spec)
    for violation in violations:
        click.echo(f"{violation.code.value}\t{violation.path}\t{violation.message}")
    sys.exit(EXIT_VALIDATION if violations else EXIT_OK)


@main.command()
@click.option("--idea", required=True)
@click.option("--transcript", type=click.Path())
@click.option("--live", is_flag=True)
def create(idea: str, transcript: str | None, live: bool) -> None:
    """Create a prototype spec from a natural-language idea."""
    gateway = _make_gateway(transcript, live)
    spec = _run_pipeline(lambda: authoring.create_from_idea(idea, gateway))
    click.echo(serialize_spec(spec))


@main.command()
@click.argument("spec_file", type=click.Path())
@click.option("--request", "revision_request", required=True)
@click.option("--transcript", type=click.Path())
@click.option("--live", is_flag=True)
@click.option("--target-output", default=None, help="Output id for principle revisions.")
def revise(spec_file: str, revision_request: str, transcript: str | None,
           live: bool, target_output: str | None) -> None:
    """Revise a spec from a natural-language request; print the outcome bundle."""
    spec = _read_spec(spec_file, strict=False)
    gateway = _make_gateway(transcript, live)
    outcome = _run_pipeline(
        lambda: authoring.revise(spec, revision_request, gateway, target_output)
    )
    click.echo(json.dumps({
        "route": outcome.route.op_type.value,
        "summaryOfChanges": list(outcome.summary_of_changes),
        "structuralDiff": diff_to_dict(outcome.structural_diff),
        "revisedSpec": json.loads(serialize_spec(outcome.revised_spec)),
    }, indent=2, ensure_ascii=False))


@main.command()
@click.argument("before_file", type=click.Path())
@click.argument("after_file", type=click.Path())
def diff(before_file: str, after_file: str) -> None:
    """Structural diff report between two spec files."""
    before = _read_spec(before_file, strict=False)
    after = _read_spec(after_file, strict=False)
    result = diff_specs(before, after)
    if result.is_empty():
        click.echo("no changes")
    else:
        click.echo(json.dumps(diff_to_dict(result), indent=2))
    sys.exit(EXIT_OK)


@main.command()
@click.argument("spec_file", type=click.Path())
@click.option("--inputs", "inputs_file", required=True, type=click.Path(),
              help="JSON file: list of {inputId, text|imageRef|selectedOption}.")
@click.option("--action", "action_id", default=None)
@click.option("--transcript", type=click.Path())
@click.option("--live", is_flag=True)
def run(spec_file: str, inputs_file: str, action_id: str | None,
        transcript: str | None, live: bool) -> None:
    """Run a prototype headlessly and print a test-case report."""
    spec = _read_spec(spec_file, strict=False)
    violations = validate_spec(spec)
    if violations:
        for violation in violations:
            click.echo(f"{violation.code.value}\t{violation.path}\t{violation.message}", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        raw_values = json.loads(Path(inputs_file).read_text(encoding="utf-8"))
        values = [
            InputValue(
                input_id=v["inputId"],
                text=v.get("text"),
                image_ref=v.get("imageRef"),
                selected_option=v.get("selectedOption"),
            )
            for v in raw_values
        ]
    except (OSError, ValueError, KeyError) as exc:
        _fail(EXIT_READ, f"cannot read inputs: {exc}")
    if action_id is None:
        if not spec.actions:
            _fail(EXIT_VALIDATION, "spec has no actions")
        action_id = spec.actions[0].id
    gateway = _make_gateway(transcript, live)
    triggered = [w for w in spec.outputs if w.triggered_by == action_id]
    results = _run_pipeline(
        lambda: [run_output(w, values, spec, gateway) for w in triggered]
    )
    click.echo(json.dumps({
        "actionId": action_id,
        "outputs": [
            {"outputId": r.output_id, "text": r.text, "imageRef": r.image_ref}
            for r in results
        ],
    }, indent=2, ensure_ascii=False))


@main.command()
@click.option("--listen", default=None, help="host:port (default LISTEN_ADDR or 127.0.0.1:8080)")
@click.option("--db", "db_path", required=True, type=click.Path())
@click.option("--transcript", type=click.Path())
@click.option("--live", is_flag=True)
def serve(listen: str | None, db_path: str, transcript: str | None, live: bool) -> None:
    """Serve the HTTP API over an embedded store."""
    import uvicorn

    from .api import create_app

    listen = listen or os.environ.get("LISTEN_ADDR", "127.0.0.1:8080")
    host, _, port = listen.partition(":")
    gateway = _make_gateway(transcript, live)
    store = SessionStore(db_path)
    app = create_app(store, gateway, operator_key=os.environ.get("OPERATOR_KEY"))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080))


if __name__ == "__main__":
    main()
