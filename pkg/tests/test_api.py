"""HTTP service: prototype CRUD, sharing, blobs, runs, feedback, NL
pipelines, and the revision dashboard. All tests run in-process."""

import json

import pytest
from fastapi.testclient import TestClient

from protokit.api import create_app
from protokit.gateway import CallableGateway, ModelResponse
from protokit.store import SessionStore

from conftest import golden_dict, golden_text


def _responder(request):
    tag = request.request_tag
    if tag == "nl-classify":
        return ModelResponse(text='{"thought": "t", "op_type": "REVISE_PRINCIPLES"}')
    if tag == "nl-principle-op":
        return ModelResponse(
            text='{"op_type": "ADD_TO_PROMPT", '
                 '"op": {"principle": "Keep replies short", index: null}}'
        )
    if tag == "nl-create":
        return ModelResponse(text="```json\n" + golden_text("style_me") + "\n```")
    # Prototype run calls are tagged with the output widget id.
    return ModelResponse(text=f"run result for {tag}")


@pytest.fixture
def client(tmp_path):
    store = SessionStore(tmp_path / "api.db")
    app = create_app(store, CallableGateway(_responder))
    with TestClient(app, raise_server_exceptions=False) as test_client:
        yield test_client
    store.close()


@pytest.fixture
def guarded_client(tmp_path):
    store = SessionStore(tmp_path / "guarded.db")
    app = create_app(store, CallableGateway(_responder), operator_key="secret-key")
    with TestClient(app, raise_server_exceptions=False) as test_client:
        yield test_client
    store.close()


def _create(client, spec=None, **headers):
    response = client.post("/prototypes", json=spec or golden_dict("style_me"),
                           headers=headers or None)
    assert response.status_code == 201, response.text
    return response.json()


def _run_inputs():
    return [
        {"inputId": "input-02-text", "text": "sunny"},
        {"inputId": "input-03-text", "text": "a gala"},
    ]


def _run(client, prototype_id, image_blob_id):
    inputs = _run_inputs() + [{"inputId": "input-01-camera", "imageRef": image_blob_id}]
    return client.post(f"/prototypes/{prototype_id}/run",
                       json={"actionId": "action-01-run", "inputs": inputs})


def _upload_blob(client, prototype_id, data=b"\x89PNG..."):
    response = client.post(f"/prototypes/{prototype_id}/blobs", content=data,
                           headers={"Content-Type": "image/png"})
    assert response.status_code == 201
    return response.json()["blobId"]


# ---------------------------------------------------------------------------
# prototypes


def test_create_and_fetch_prototype(client):
    created = _create(client)
    got = client.get(f"/prototypes/{created['prototypeId']}")
    assert got.status_code == 200
    body = got.json()
    assert body["headVersionId"] == created["versionId"]
    assert body["spec"]["appInfo"]["funName"] == "Style Me!"
    assert len(body["versions"]) == 1
    assert body["versions"][0]["origin"] == "MANUAL"


def test_create_rejects_invalid_spec(client):
    raw = golden_dict("style_me")
    raw["outputs"][0]["triggeredBy"] = "action-99"
    response = client.post("/prototypes", json=raw)
    assert response.status_code == 422
    body = response.json()
    assert body["code"] == "INVALID_SPEC"
    assert body["detail"][0]["code"] == "DANGLING_TRIGGER"


def test_create_rejects_malformed_body(client):
    response = client.post("/prototypes", json={"not": "a spec"})
    assert response.status_code == 422
    assert response.json()["code"] == "SCHEMA_ERROR"


def test_put_appends_version(client):
    created = _create(client)
    raw = golden_dict("style_me")
    raw["appInfo"]["funName"] = "Style Me! 2"
    response = client.put(f"/prototypes/{created['prototypeId']}", json={
        "spec": raw, "expectedHeadVersion": created["versionId"],
    })
    assert response.status_code == 200
    got = client.get(f"/prototypes/{created['prototypeId']}").json()
    assert len(got["versions"]) == 2
    assert got["spec"]["appInfo"]["funName"] == "Style Me! 2"


def test_put_stale_head_conflicts(client):
    created = _create(client)
    raw = golden_dict("style_me")
    response = client.put(f"/prototypes/{created['prototypeId']}", json={
        "spec": raw, "expectedHeadVersion": "v-stale",
    })
    assert response.status_code == 409
    assert response.json()["code"] == "VERSION_CONFLICT"


def test_get_unknown_prototype(client):
    response = client.get("/prototypes/proto-missing")
    assert response.status_code == 404
    assert response.json()["code"] == "NOT_FOUND"


def test_share_token_entry(client):
    created = _create(client)
    response = client.get(f"/p/{created['shareToken']}")
    assert response.status_code == 200
    body = response.json()
    assert body["prototypeId"] == created["prototypeId"]
    assert body["spec"]["appInfo"]["funName"] == "Style Me!"
    assert client.get("/p/bogus-token").status_code == 404


# ---------------------------------------------------------------------------
# blobs


def test_blob_upload_and_download(client):
    created = _create(client)
    blob_id = _upload_blob(client, created["prototypeId"], b"image bytes")
    got = client.get(f"/blobs/{blob_id}")
    assert got.status_code == 200
    assert got.content == b"image bytes"


def test_blob_rejects_non_image(client):
    created = _create(client)
    response = client.post(f"/prototypes/{created['prototypeId']}/blobs",
                           content=b"x", headers={"Content-Type": "text/plain"})
    assert response.status_code == 415
    assert response.json()["code"] == "UNSUPPORTED_MEDIA_TYPE"


def test_blob_rejects_empty_and_oversized(client):
    created = _create(client)
    empty = client.post(f"/prototypes/{created['prototypeId']}/blobs",
                        content=b"", headers={"Content-Type": "image/png"})
    assert empty.status_code == 400
    big = client.post(f"/prototypes/{created['prototypeId']}/blobs",
                      content=b"x" * (10 * 1024 * 1024 + 1),
                      headers={"Content-Type": "image/png"})
    assert big.status_code == 413
    assert big.json()["code"] == "BLOB_TOO_LARGE"


def test_blob_unknown_id(client):
    assert client.get("/blobs/" + "0" * 64).status_code == 404


# ---------------------------------------------------------------------------
# runs and test cases


def test_run_records_test_case(client):
    created = _create(client)
    blob_id = _upload_blob(client, created["prototypeId"])
    response = _run(client, created["prototypeId"], blob_id)
    assert response.status_code == 201
    body = response.json()
    assert body["versionId"] == created["versionId"]
    assert body["outputs"] == [{
        "outputId": "output-01-multimodal",
        "text": "run result for output-01-multimodal",
        "imageRef": None,
    }]
    listed = client.get(f"/prototypes/{created['prototypeId']}/testcases").json()
    assert [tc["testCaseId"] for tc in listed] == [body["testCaseId"]]


def test_run_unknown_action(client):
    created = _create(client)
    response = client.post(f"/prototypes/{created['prototypeId']}/run",
                           json={"actionId": "action-99", "inputs": []})
    assert response.status_code == 404


def test_run_missing_input(client):
    created = _create(client)
    response = client.post(f"/prototypes/{created['prototypeId']}/run", json={
        "actionId": "action-01-run", "inputs": _run_inputs(),
    })
    assert response.status_code == 422
    assert response.json()["code"] == "MISSING_INPUT"
    # Failed runs leave no test case behind.
    assert client.get(f"/prototypes/{created['prototypeId']}/testcases").json() == []


def test_run_unknown_blob(client):
    created = _create(client)
    response = _run(client, created["prototypeId"], "f" * 64)
    assert response.status_code == 422
    assert response.json()["code"] == "UNKNOWN_BLOB"


def test_feedback_set_and_clear(client):
    created = _create(client)
    blob_id = _upload_blob(client, created["prototypeId"])
    tc_id = _run(client, created["prototypeId"], blob_id).json()["testCaseId"]
    url = f"/prototypes/{created['prototypeId']}/testcases/{tc_id}/feedback"
    set_response = client.post(url, json={"feedback": "outfit ignored the weather"})
    assert set_response.status_code == 200
    assert set_response.json()["feedback"] == "outfit ignored the weather"
    clear_response = client.post(url, json={"feedback": ""})
    assert clear_response.json()["feedback"] is None


def test_feedback_wrong_prototype(client):
    first = _create(client)
    second = _create(client)
    blob_id = _upload_blob(client, first["prototypeId"])
    tc_id = _run(client, first["prototypeId"], blob_id).json()["testCaseId"]
    response = client.post(
        f"/prototypes/{second['prototypeId']}/testcases/{tc_id}/feedback",
        json={"feedback": "x"},
    )
    assert response.status_code == 404


# ---------------------------------------------------------------------------
# NL pipelines


def test_nl_create_persists_prototype(client):
    response = client.post("/nl/create", json={"idea": "an outfit stylist"})
    assert response.status_code == 201
    body = response.json()
    assert body["spec"]["appInfo"]["funName"] == "Style Me!"
    stored = client.get(f"/prototypes/{body['prototypeId']}").json()
    assert stored["versions"][0]["origin"] == "NL_CREATE"
    assert client.get(f"/p/{body['shareToken']}").status_code == 200


def test_nl_create_rejects_empty_idea(client):
    response = client.post("/nl/create", json={"idea": "  "})
    assert response.status_code == 422
    assert response.json()["code"] == "INVALID_REQUEST"


def test_nl_revise_is_non_mutating(client):
    created = _create(client)
    response = client.post(f"/prototypes/{created['prototypeId']}/nl-revise",
                           json={"request": "keep it short"})
    assert response.status_code == 200
    body = response.json()
    assert body["route"]["opType"] == "REVISE_PRINCIPLES"
    assert body["baseVersionId"] == created["versionId"]
    assert body["summaryOfChanges"] == ["Add principle: Keep replies short"]
    assert body["revisedSpec"]["outputs"][0]["principles"][-1] == "Keep replies short"
    assert body["originalSpec"]["outputs"][0]["principles"][-1] != "Keep replies short"
    assert json.loads(body["revisedSpecText"]) == body["revisedSpec"]
    # No version was created and no revision recorded.
    stored = client.get(f"/prototypes/{created['prototypeId']}").json()
    assert len(stored["versions"]) == 1
    assert client.get(f"/prototypes/{created['prototypeId']}/revisions").json() == []


def test_nl_revise_empty_request(client):
    created = _create(client)
    response = client.post(f"/prototypes/{created['prototypeId']}/nl-revise",
                           json={"request": ""})
    assert response.status_code == 422


def test_nl_revise_backend_parse_failure_is_502(tmp_path):
    store = SessionStore(tmp_path / "b.db")
    gateway = CallableGateway(lambda req: ModelResponse(text="no json at all"))
    app = create_app(store, gateway)
    with TestClient(app, raise_server_exceptions=False) as client:
        created = _create(client)
        response = client.post(f"/prototypes/{created['prototypeId']}/nl-revise",
                               json={"request": "anything"})
        assert response.status_code == 502
        assert response.json()["code"] == "UNPARSEABLE_MODEL_OUTPUT"
    store.close()


# ---------------------------------------------------------------------------
# revision dashboard


def _submit_revision(client, created):
    raw = golden_dict("style_me")
    raw["outputs"][0]["principles"].append("Keep replies short")
    raw["summaryOfChanges"] = ["Add principle: Keep replies short"]
    response = client.post(f"/prototypes/{created['prototypeId']}/revisions", json={
        "baseVersionId": created["versionId"],
        "request": "keep it short",
        "revisedSpec": raw,
        "summaryOfChanges": raw["summaryOfChanges"],
    })
    assert response.status_code == 201, response.text
    return response.json()


def test_revision_submit_list_apply(client):
    created = _create(client)
    revision = _submit_revision(client, created)
    assert revision["status"] == "PENDING"

    listed = client.get(f"/prototypes/{created['prototypeId']}/revisions").json()
    assert len(listed) == 1
    assert listed[0]["revisionId"] == revision["revisionId"]
    assert listed[0]["summaryOfChanges"] == ["Add principle: Keep replies short"]

    applied = client.post(f"/revisions/{revision['revisionId']}/apply")
    assert applied.status_code == 200
    assert applied.json()["status"] == "APPLIED"
    stored = client.get(f"/prototypes/{created['prototypeId']}").json()
    assert len(stored["versions"]) == 2
    assert stored["versions"][-1]["origin"] == "REVISION_APPLIED"
    assert stored["spec"]["outputs"][0]["principles"][-1] == "Keep replies short"


def test_revision_reject_then_apply_conflicts(client):
    created = _create(client)
    revision = _submit_revision(client, created)
    assert client.post(f"/revisions/{revision['revisionId']}/reject").status_code == 200
    second = client.post(f"/revisions/{revision['revisionId']}/apply")
    assert second.status_code == 409
    assert second.json()["code"] == "ALREADY_DECIDED"


def test_revision_unknown_id(client):
    assert client.post("/revisions/rev-missing/apply").status_code == 404


# ---------------------------------------------------------------------------
# operator key


def test_operator_key_guards_builder_endpoints(guarded_client):
    response = guarded_client.post("/prototypes", json=golden_dict("style_me"))
    assert response.status_code == 403
    assert response.json()["code"] == "OPERATOR_KEY_REQUIRED"
    wrong = guarded_client.post("/prototypes", json=golden_dict("style_me"),
                                headers={"X-Operator-Key": "wrong"})
    assert wrong.status_code == 403
    created = _create(guarded_client, **{"X-Operator-Key": "secret-key"})

    # Tester-facing endpoints stay open.
    assert guarded_client.get(f"/p/{created['shareToken']}").status_code == 200
    assert guarded_client.get(
        f"/prototypes/{created['prototypeId']}/testcases").status_code == 200

    assert guarded_client.post("/nl/create", json={"idea": "x"}).status_code == 403
    revision = _submit_revision(guarded_client, created)
    assert guarded_client.post(
        f"/revisions/{revision['revisionId']}/apply").status_code == 403
    applied = guarded_client.post(f"/revisions/{revision['revisionId']}/apply",
                                  headers={"X-Operator-Key": "secret-key"})
    assert applied.status_code == 200
