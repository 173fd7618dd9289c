"""HTTP surface binding the spec engine, NL pipelines, gateway, and store:
build, share, run in the wild, revise on-device, review revisions.

Auth is a share-token capability model: the bearer of a share URL may run,
test, and suggest revisions. When an operator key is configured, builder
and designer endpoints additionally require the ``X-Operator-Key`` header.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import authoring
from .authoring import (
    AuthoringError,
    InvalidGeneratedSpecError,
    MissingSummaryError,
    NoConfigFoundError,
    UnparseableOpError,
    UnparseableRouteError,
)
from .gateway import (
    BackendUnavailableError,
    GatewayError,
    ModelGateway,
    ModelRefusalError,
    TranscriptMissError,
)
from .model import (
    PrototypeSpec,
    SpecError,
    SpecSyntaxError,
    diff_to_dict,
    parse_spec,
    serialize_spec,
    spec_to_dict,
    validate_spec,
)
from .prompting import (
    InputValue,
    MissingInputError,
    ModalityMismatchError,
    OutputResult,
    run_output,
)
from .store import (
    AlreadyDecidedError,
    NotFoundError,
    SessionStore,
    SuggestedRevision,
    TestCase,
    VersionConflictError,
    VersionOrigin,
)

MAX_BLOB_BYTES = 10 * 1024 * 1024
ACCEPTED_IMAGE_TYPES = {"image/png", "image/jpeg", "image/webp", "image/gif"}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def _error_response(exc: ApiError) -> JSONResponse:
    body = {"code": exc.code, "message": exc.message}
    if exc.detail is not None:
        body["detail"] = exc.detail
    return JSONResponse(status_code=exc.status, content=body)


def _map_exception(exc: Exception) -> ApiError:
    """Every module error maps to exactly one (status, code)."""
    if isinstance(exc, ApiError):
        return exc
    if isinstance(exc, NotFoundError):
        return ApiError(404, "NOT_FOUND", str(exc))
    if isinstance(exc, VersionConflictError):
        return ApiError(409, "VERSION_CONFLICT", str(exc))
    if isinstance(exc, AlreadyDecidedError):
        return ApiError(409, "ALREADY_DECIDED", str(exc))
    if isinstance(exc, MissingInputError):
        return ApiError(422, "MISSING_INPUT", str(exc), detail=exc.input_id)
    if isinstance(exc, ModalityMismatchError):
        return ApiError(422, "MODALITY_MISMATCH", str(exc), detail=exc.input_id)
    if isinstance(exc, SpecSyntaxError):
        return ApiError(400, "SYNTAX_ERROR", str(exc))
    if isinstance(exc, SpecError):
        return ApiError(422, "SCHEMA_ERROR", str(exc))
    if isinstance(exc, NoConfigFoundError):
        return ApiError(502, "NO_CONFIG_FOUND", str(exc))
    if isinstance(exc, MissingSummaryError):
        return ApiError(422, "MISSING_SUMMARY", str(exc))
    if isinstance(exc, InvalidGeneratedSpecError):
        return ApiError(422, "INVALID_GENERATED_SPEC", str(exc))
    if isinstance(exc, (UnparseableRouteError, UnparseableOpError)):
        return ApiError(502, "UNPARSEABLE_MODEL_OUTPUT", str(exc))
    if isinstance(exc, TranscriptMissError):
        return ApiError(502, "TRANSCRIPT_MISS", str(exc))
    if isinstance(exc, ModelRefusalError):
        return ApiError(502, "MODEL_REFUSAL", str(exc))
    if isinstance(exc, (BackendUnavailableError, GatewayError)):
        return ApiError(502, "BACKEND_UNAVAILABLE", str(exc))
    if isinstance(exc, AuthoringError):
        return ApiError(422, "AUTHORING_ERROR", str(exc))
    if isinstance(exc, ValueError):
        return ApiError(422, "INVALID_REQUEST", str(exc))
    raise exc


def _test_case_to_dict(tc: TestCase) -> dict:
    return {
        "testCaseId": tc.test_case_id,
        "prototypeId": tc.prototype_id,
        "versionId": tc.version_id,
        "inputs": [_value_to_dict(v) for v in tc.inputs],
        "outputs": [
            {
                "outputId": r.output_id,
                "text": r.text,
                "imageRef": r.image_ref,
            }
            for r in tc.outputs
        ],
        "feedback": tc.feedback,
        "createdAt": tc.created_at,
    }


def _value_to_dict(value: InputValue) -> dict:
    out: dict[str, Any] = {"inputId": value.input_id}
    if value.text is not None:
        out["text"] = value.text
    if value.image_ref is not None:
        out["imageRef"] = value.image_ref
    if value.selected_option is not None:
        out["selectedOption"] = value.selected_option
    return out


def _value_from_dict(raw: dict) -> InputValue:
    return InputValue(
        input_id=raw.get("inputId", ""),
        text=raw.get("text"),
        image_ref=raw.get("imageRef"),
        selected_option=raw.get("selectedOption"),
    )


def _revision_to_dict(rev: SuggestedRevision) -> dict:
    return {
        "revisionId": rev.revision_id,
        "prototypeId": rev.prototype_id,
        "baseVersionId": rev.base_version_id,
        "request": rev.request,
        "revisedSpec": spec_to_dict(rev.revised_spec),
        "summaryOfChanges": list(rev.summary_of_changes),
        "latestTestCaseId": rev.latest_test_case_id,
        "status": rev.status.value,
        "createdAt": rev.created_at,
    }


def _parse_body_spec(raw: Any) -> PrototypeSpec:
    # Service parsing is lenient: model-generated specs may carry extra keys.
    spec = parse_spec(json.dumps(raw), strict=False)
    violations = validate_spec(spec)
    if violations:
        raise ApiError(422, "INVALID_SPEC", "spec failed validation", detail=[
            {"code": v.code.value, "path": v.path, "message": v.message}
            for v in violations
        ])
    return spec


def create_app(
    store: SessionStore,
    gateway: ModelGateway,
    operator_key: str | None = None,
    template_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="protokit", docs_url=None, redoc_url=None)

    @app.exception_handler(Exception)
    async def handle(_request: Request, exc: Exception):
        return _error_response(_map_exception(exc))

    def require_operator(request: Request) -> None:
        if operator_key and request.headers.get("X-Operator-Key") != operator_key:
            raise ApiError(403, "OPERATOR_KEY_REQUIRED", "missing or wrong operator key")

    # -- prototypes ---------------------------------------------------------

    @app.post("/prototypes", status_code=201)
    async def create_prototype(request: Request):
        require_operator(request)
        spec = _parse_body_spec(await request.json())
        prototype_id, version_id, token = store.save_prototype(spec)
        return {"prototypeId": prototype_id, "versionId": version_id, "shareToken": token}

    @app.get("/prototypes/{prototype_id}")
    async def get_prototype(prototype_id: str):
        stored = store.get_prototype(prototype_id)
        return {
            "prototypeId": stored.prototype_id,
            "shareToken": stored.share_token,
            "headVersionId": stored.head.version_id,
            "spec": spec_to_dict(stored.head.spec),
            "versions": [
                {
                    "versionId": v.version_id,
                    "origin": v.origin.value,
                    "createdAt": v.created_at,
                    "spec": spec_to_dict(v.spec),
                }
                for v in stored.versions
            ],
        }

    @app.put("/prototypes/{prototype_id}")
    async def put_prototype(prototype_id: str, request: Request):
        require_operator(request)
        body = await request.json()
        spec = _parse_body_spec(body.get("spec"))
        expected = body.get("expectedHeadVersion", "")
        version_id = store.add_version(prototype_id, spec, VersionOrigin.MANUAL, expected)
        return {"prototypeId": prototype_id, "versionId": version_id}

    @app.get("/p/{share_token}")
    async def tester_entry(share_token: str):
        prototype_id, spec = store.get_by_share_token(share_token)
        head = store.get_prototype(prototype_id).head
        return {
            "prototypeId": prototype_id,
            "headVersionId": head.version_id,
            "spec": spec_to_dict(spec),
        }

    # -- blobs --------------------------------------------------------------

    @app.post("/prototypes/{prototype_id}/blobs", status_code=201)
    async def upload_blob(prototype_id: str, request: Request):
        store.get_prototype(prototype_id)
        content_type = request.headers.get("content-type", "").split(";")[0].strip()
        if content_type not in ACCEPTED_IMAGE_TYPES:
            raise ApiError(415, "UNSUPPORTED_MEDIA_TYPE",
                           f"content type '{content_type}' is not an accepted raster image")
        body = await request.body()
        if not body:
            raise ApiError(400, "EMPTY_BODY", "blob body is empty")
        if len(body) > MAX_BLOB_BYTES:
            raise ApiError(413, "BLOB_TOO_LARGE", "blob exceeds 10 MiB")
        return {"blobId": store.blobs.put(body)}

    @app.get("/blobs/{blob_id}")
    async def get_blob(blob_id: str):
        return Response(content=store.blobs.get(blob_id), media_type="application/octet-stream")

    # -- running ------------------------------------------------------------

    @app.post("/prototypes/{prototype_id}/run", status_code=201)
    async def run(prototype_id: str, request: Request):
        body = await request.json()
        stored = store.get_prototype(prototype_id)
        spec = stored.head.spec
        action_id = body.get("actionId", "")
        if spec.action_by_id(action_id) is None:
            raise ApiError(404, "NOT_FOUND", f"no action '{action_id}'")
        values = [_value_from_dict(v) for v in body.get("inputs", [])]
        for value in values:
            if value.image_ref is not None and not store.blobs.exists(value.image_ref):
                raise ApiError(422, "UNKNOWN_BLOB", f"no blob {value.image_ref}")
        triggered = [w for w in spec.outputs if w.triggered_by == action_id]
        results: list[OutputResult] = []
        for widget in triggered:
            results.append(run_output(widget, values, spec, gateway))
        # Persist only after every output succeeded: a gateway failure above
        # propagates as 502 with no test case written.
        test_case = store.record_test_case(
            prototype_id, stored.head.version_id, values, results
        )
        return _test_case_to_dict(test_case)

    @app.get("/prototypes/{prototype_id}/testcases")
    async def list_test_cases(prototype_id: str):
        return [_test_case_to_dict(tc) for tc in store.list_test_cases(prototype_id)]

    @app.post("/prototypes/{prototype_id}/testcases/{test_case_id}/feedback")
    async def set_feedback(prototype_id: str, test_case_id: str, request: Request):
        body = await request.json()
        feedback = body.get("feedback", "")
        tc = store.get_test_case(test_case_id)
        if tc.prototype_id != prototype_id:
            raise ApiError(404, "NOT_FOUND", f"no test case {test_case_id} under {prototype_id}")
        # Empty string clears feedback; otherwise stored verbatim, last write wins.
        updated = store.set_feedback(test_case_id, feedback if feedback else None)
        return _test_case_to_dict(updated)

    # -- NL pipelines -------------------------------------------------------

    @app.post("/nl/create", status_code=201)
    async def nl_create(request: Request):
        require_operator(request)
        body = await request.json()
        idea = body.get("idea", "")
        if not idea.strip():
            raise ApiError(422, "INVALID_REQUEST", "idea must be non-empty")
        spec = authoring.create_from_idea(idea, gateway, template_dir)
        prototype_id, version_id, token = store.save_prototype(spec, VersionOrigin.NL_CREATE)
        return {
            "prototypeId": prototype_id,
            "versionId": version_id,
            "shareToken": token,
            "spec": spec_to_dict(spec),
        }

    @app.post("/prototypes/{prototype_id}/nl-revise")
    async def nl_revise(prototype_id: str, request: Request):
        """Compute a revision without mutating stored state; clients hold the
        outcome until they POST it to /revisions."""
        body = await request.json()
        revision_request = body.get("request", "")
        if not revision_request.strip():
            raise ApiError(422, "INVALID_REQUEST", "request must be non-empty")
        stored = store.get_prototype(prototype_id)
        spec = stored.head.spec
        target = body.get("targetOutputId")
        if target is None and len(spec.outputs) > 1:
            target = _latest_run_output(store, prototype_id)
        outcome = authoring.revise(spec, revision_request, gateway, target, template_dir)
        return {
            "prototypeId": prototype_id,
            "baseVersionId": stored.head.version_id,
            "route": {
                "thought": outcome.route.thought,
                "opType": outcome.route.op_type.value,
            },
            "originalSpec": spec_to_dict(spec),
            "revisedSpec": spec_to_dict(outcome.revised_spec),
            "originalSpecText": serialize_spec(spec),
            "revisedSpecText": serialize_spec(outcome.revised_spec),
            "summaryOfChanges": list(outcome.summary_of_changes),
            "structuralDiff": diff_to_dict(outcome.structural_diff),
        }

    # -- suggested revisions ------------------------------------------------

    @app.post("/prototypes/{prototype_id}/revisions", status_code=201)
    async def submit_revision(prototype_id: str, request: Request):
        body = await request.json()
        stored = store.get_prototype(prototype_id)
        revised = _parse_body_spec(body.get("revisedSpec"))
        revision = store.submit_revision(
            prototype_id,
            body.get("baseVersionId") or stored.head.version_id,
            body.get("request", ""),
            revised,
            list(body.get("summaryOfChanges", [])),
            body.get("latestTestCaseId"),
        )
        return {"revisionId": revision.revision_id, "status": revision.status.value}

    @app.get("/prototypes/{prototype_id}/revisions")
    async def list_revisions(prototype_id: str):
        return [_revision_to_dict(rev) for rev in store.list_revisions(prototype_id)]

    @app.post("/revisions/{revision_id}/apply")
    async def apply_revision(revision_id: str, request: Request):
        require_operator(request)
        revision = store.get_revision(revision_id)
        version_id = store.apply_revision(revision.prototype_id, revision_id)
        return {"revisionId": revision_id, "versionId": version_id, "status": "APPLIED"}

    @app.post("/revisions/{revision_id}/reject")
    async def reject_revision(revision_id: str, request: Request):
        require_operator(request)
        store.reject_revision(revision_id)
        return {"revisionId": revision_id, "status": "REJECTED"}

    return app


def _latest_run_output(store: SessionStore, prototype_id: str) -> str | None:
    """Default principle-revision target: the output of the most recent run."""
    test_cases = store.list_test_cases(prototype_id)
    for tc in test_cases:
        if tc.outputs:
            return tc.outputs[0].output_id
    return None
