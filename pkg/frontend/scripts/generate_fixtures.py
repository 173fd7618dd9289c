"""Record real service responses as JSON fixtures for the web client's
contract tests. Runs the backend in-process; no network, no live model.

Usage: python3 frontend/scripts/generate_fixtures.py
"""

import hashlib
import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from protokit.api import create_app
from protokit.gateway import CallableGateway, ModelResponse
from protokit.store import SessionStore

REPO = Path(__file__).resolve().parents[2]
FIXTURES = REPO / "frontend" / "tests" / "fixtures"
GOLDEN = REPO / "tests" / "fixtures" / "golden"

IMAGE_BYTES = b"\x89PNG synthetic room photo"

SHOWCASE_SPEC = {
    "appInfo": {
        "funName": "Trip Planner Cam",
        "shortDescription": "Plan activities from a photo of your surroundings",
        "functionalDescription": "Point the camera at a place, pick a mood, and "
                                 "get activity cards plus a periodic tip.",
    },
    "inputs": [
        {"id": "input-01-camera", "type": "CAMERA",
         "description": "A photo of where you are", "options": []},
        {"id": "input-02-text", "type": "TEXT",
         "description": "Who is with you", "options": [],
         "placeholder": "e.g. two friends"},
        {"id": "input-03-upload", "type": "UPLOAD_IMAGE",
         "description": "A photo of something you packed", "options": []},
        {"id": "input-04-options", "type": "OPTIONS_LIST",
         "description": "Mood", "options": ["Relaxed", "Adventurous", "Hungry"]},
    ],
    "actions": [
        {"id": "action-01-run", "type": "RUN_BUTTON"},
        {"id": "action-02-timer", "type": "TIMER", "intervalSeconds": 60},
    ],
    "outputs": [
        {"id": "output-01-cards", "type": "MULTIMODAL",
         "description": "Activity suggestions",
         "modelInstructions": "You suggest activities based on a photo of the "
                              "user's surroundings.",
         "principles": ["1. Suggest exactly three activities",
                        "2. Each activity fits the selected mood"],
         "prompt": "SURROUNDINGS: [[input-01-camera]]\nCOMPANY: [[input-02-text]]\n"
                   "PACKED ITEM: [[input-03-upload]]\nMOOD: [[input-04-options]]",
         "triggeredBy": "action-01-run",
         "displayStyle": "CAROUSEL_CARD"},
        {"id": "output-02-tip", "type": "TEXT",
         "description": "A periodic tip",
         "modelInstructions": "You give one short travel tip.",
         "principles": ["1. One sentence only"],
         "prompt": "COMPANY: [[input-02-text]]",
         "triggeredBy": "action-02-timer",
         "displayStyle": "PLAIN_TEXT"},
    ],
    "displayConfig": {"fontStyle": "serif", "layoutStyle": "CAMERA_FULLSCREEN"},
}


def golden_text(name):
    return (GOLDEN / f"{name}.json").read_text(encoding="utf-8")


def responder(request):
    tag = request.request_tag
    if tag == "nl-classify":
        return ModelResponse(
            text='{"thought": "new inputs are needed", '
                 '"op_type": "REVISE_PROTOTYPE_STRUCTURE"}')
    if tag.startswith("nl-revise-structure"):
        return ModelResponse(text=golden_text("style_me_revised"))
    if tag == "output-01-cards":
        return ModelResponse(
            text="Beach walk: stroll the shoreline.\n\n"
                 "Market visit: sample local snacks.\n\n"
                 "Viewpoint hike: catch the sunset.")
    if tag == "output-01-multimodal":
        return ModelResponse(text="Wear the denim jacket with white sneakers.")
    return ModelResponse(text=f"recorded output for {tag}")


def dump(name, payload):
    path = FIXTURES / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    print(f"wrote {path.relative_to(REPO)}")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        store = SessionStore(Path(tmp) / "fixtures.db")
        app = create_app(store, CallableGateway(responder))
        with TestClient(app, raise_server_exceptions=False) as client:
            # Widget showcase: every control type, fullscreen camera layout.
            created = client.post("/prototypes", json=SHOWCASE_SPEC)
            created.raise_for_status()
            showcase_id = created.json()["prototypeId"]
            shared = client.get(f"/p/{created.json()['shareToken']}")
            dump("shared_showcase", shared.json())

            blob = client.post(f"/prototypes/{showcase_id}/blobs",
                               content=IMAGE_BYTES,
                               headers={"Content-Type": "image/png"})
            blob_id = blob.json()["blobId"]
            run = client.post(f"/prototypes/{showcase_id}/run", json={
                "actionId": "action-01-run",
                "inputs": [
                    {"inputId": "input-01-camera", "imageRef": blob_id},
                    {"inputId": "input-02-text", "text": "two friends"},
                    {"inputId": "input-03-upload", "imageRef": blob_id},
                    {"inputId": "input-04-options", "selectedOption": "Adventurous"},
                ],
            })
            run.raise_for_status()
            dump("run_test_case", run.json())

            # Invalid spec rejection for builder badge tests.
            broken = json.loads(json.dumps(SHOWCASE_SPEC))
            broken["outputs"][0]["triggeredBy"] = "action-99"
            rejected = client.post("/prototypes", json=broken)
            assert rejected.status_code == 422
            dump("invalid_spec_error", rejected.json())

            # Structure revision outcome over the outfit example pair.
            base = client.post("/prototypes",
                               json=json.loads(golden_text("style_me_base")))
            base.raise_for_status()
            base_id = base.json()["prototypeId"]
            base_blob = client.post(f"/prototypes/{base_id}/blobs",
                                    content=IMAGE_BYTES,
                                    headers={"Content-Type": "image/png"})
            base_run = client.post(f"/prototypes/{base_id}/run", json={
                "actionId": "action-01-run",
                "inputs": [{"inputId": "input-01-camera",
                            "imageRef": base_blob.json()["blobId"]}],
            })
            base_run.raise_for_status()
            dump("base_test_case", base_run.json())
            outcome = client.post(f"/prototypes/{base_id}/nl-revise", json={
                "request": "Also ask about the weather and the occasion",
            })
            outcome.raise_for_status()
            dump("revise_outcome_structure", outcome.json())

            # Dashboard states: pending, applied, rejected.
            submitted = client.post(f"/prototypes/{base_id}/revisions", json={
                "baseVersionId": outcome.json()["baseVersionId"],
                "request": "Also ask about the weather and the occasion",
                "revisedSpec": outcome.json()["revisedSpec"],
                "summaryOfChanges": outcome.json()["summaryOfChanges"],
                "latestTestCaseId": base_run.json()["testCaseId"],
            })
            submitted.raise_for_status()
            dump("revisions_pending", client.get(
                f"/prototypes/{base_id}/revisions").json())

            applied = client.post(
                f"/revisions/{submitted.json()['revisionId']}/apply")
            applied.raise_for_status()

            second = client.post(f"/prototypes/{base_id}/revisions", json={
                "request": "never mind",
                "revisedSpec": json.loads(golden_text("style_me_base")),
                "summaryOfChanges": ["No changes"],
            })
            second.raise_for_status()
            client.post(f"/revisions/{second.json()['revisionId']}/reject")
            dump("revisions_decided", client.get(
                f"/prototypes/{base_id}/revisions").json())
        store.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
