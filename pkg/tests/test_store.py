"""Session store: versioning, share tokens, test cases, suggested revisions,
blobs, export bundles, concurrency."""

import dataclasses
import json
import threading
import zipfile

import pytest

from protokit.model import parse_spec, serialize_spec
from protokit.prompting import InputValue, OutputResult
from protokit.store import (
    AlreadyDecidedError,
    BlobStore,
    InvalidSpecStoreError,
    NotFoundError,
    RevisionStatus,
    SessionStore,
    VersionConflictError,
    VersionOrigin,
)

from conftest import golden_dict, golden_spec


@pytest.fixture
def store(tmp_path):
    s = SessionStore(tmp_path / "sessions.db")
    yield s
    s.close()


def _revised(spec, suffix=" v2"):
    info = dataclasses.replace(spec.app_info, fun_name=spec.app_info.fun_name + suffix)
    return dataclasses.replace(spec, app_info=info)


# ---------------------------------------------------------------------------
# prototypes and versions


def test_save_and_get_round_trip(store, style_me):
    prototype_id, version_id, token = store.save_prototype(style_me)
    stored = store.get_prototype(prototype_id)
    assert stored.prototype_id == prototype_id
    assert stored.share_token == token
    assert len(stored.versions) == 1
    assert stored.head.version_id == version_id
    assert stored.head.spec == style_me
    assert stored.head.origin is VersionOrigin.MANUAL


def test_add_version_appends_in_order(store, style_me):
    prototype_id, v1, _ = store.save_prototype(style_me)
    v2 = store.add_version(prototype_id, _revised(style_me), VersionOrigin.NL_REVISE, v1)
    v3 = store.add_version(prototype_id, _revised(style_me, " v3"),
                           VersionOrigin.MANUAL, v2)
    stored = store.get_prototype(prototype_id)
    assert [v.version_id for v in stored.versions] == [v1, v2, v3]
    assert stored.head.spec.app_info.fun_name == "Style Me! v3"
    assert stored.versions[1].origin is VersionOrigin.NL_REVISE


def test_add_version_stale_head_conflicts(store, style_me):
    prototype_id, v1, _ = store.save_prototype(style_me)
    store.add_version(prototype_id, _revised(style_me), VersionOrigin.MANUAL, v1)
    with pytest.raises(VersionConflictError) as err:
        store.add_version(prototype_id, _revised(style_me, " v3"),
                          VersionOrigin.MANUAL, v1)
    assert err.value.expected == v1
    # A failed append leaves history untouched.
    assert len(store.get_prototype(prototype_id).versions) == 2


def test_add_version_unknown_prototype(store, style_me):
    with pytest.raises(NotFoundError):
        store.add_version("proto-missing", style_me, VersionOrigin.MANUAL, "v-x")


def test_store_refuses_invalid_spec(store):
    raw = golden_dict("style_me")
    raw["outputs"][0]["triggeredBy"] = "action-99"
    bad = parse_spec(json.dumps(raw))
    with pytest.raises(InvalidSpecStoreError):
        store.save_prototype(bad)


def test_get_unknown_prototype(store):
    with pytest.raises(NotFoundError):
        store.get_prototype("proto-missing")


# ---------------------------------------------------------------------------
# share tokens


def test_share_token_resolves_to_head(store, style_me):
    prototype_id, v1, token = store.save_prototype(style_me)
    store.add_version(prototype_id, _revised(style_me), VersionOrigin.MANUAL, v1)
    resolved_id, spec = store.get_by_share_token(token)
    assert resolved_id == prototype_id
    assert spec.app_info.fun_name == "Style Me! v2"


def test_share_tokens_are_unique_and_long(store, style_me):
    tokens = {store.save_prototype(style_me)[2] for _ in range(20)}
    assert len(tokens) == 20
    assert all(len(t) >= 16 for t in tokens)


def test_deleted_token_is_retired_forever(store, style_me, tmp_path):
    prototype_id, _, token = store.save_prototype(style_me)
    store.delete_prototype(prototype_id)
    with pytest.raises(NotFoundError):
        store.get_by_share_token(token)
    with pytest.raises(NotFoundError):
        store.get_prototype(prototype_id)
    # Retirement survives process restart (same database file).
    reopened = SessionStore(store.db_path)
    try:
        row = reopened._conn.execute(
            "SELECT 1 FROM retired_tokens WHERE share_token = ?", (token,)
        ).fetchone()
        assert row is not None
    finally:
        reopened.close()


def test_unknown_share_token(store):
    with pytest.raises(NotFoundError):
        store.get_by_share_token("nope")


# ---------------------------------------------------------------------------
# test cases


def _sample_run(store, style_me):
    prototype_id, version_id, _ = store.save_prototype(style_me)
    inputs = [
        InputValue("input-01-camera", image_ref="blob-1"),
        InputValue("input-02-text", text="sunny"),
        InputValue("input-03-text", text="a gala"),
    ]
    outputs = [OutputResult("output-01-multimodal", text="Wear the gown",
                            raw_model_text="Wear the gown")]
    return prototype_id, version_id, inputs, outputs


def test_record_and_fetch_test_case(store, style_me):
    prototype_id, version_id, inputs, outputs = _sample_run(store, style_me)
    recorded = store.record_test_case(prototype_id, version_id, inputs, outputs)
    fetched = store.get_test_case(recorded.test_case_id)
    assert fetched.inputs == tuple(inputs)
    assert fetched.outputs == tuple(outputs)
    assert fetched.version_id == version_id
    assert fetched.feedback is None


def test_test_case_requires_existing_version(store, style_me):
    prototype_id, _, inputs, outputs = _sample_run(store, style_me)
    with pytest.raises(NotFoundError):
        store.record_test_case(prototype_id, "v-missing", inputs, outputs)


def test_list_test_cases_newest_first(store, style_me):
    prototype_id, version_id, inputs, outputs = _sample_run(store, style_me)
    ids = [store.record_test_case(prototype_id, version_id, inputs, outputs).test_case_id
           for _ in range(3)]
    listed = [tc.test_case_id for tc in store.list_test_cases(prototype_id)]
    assert sorted(listed) == sorted(ids)
    times = [tc.created_at for tc in store.list_test_cases(prototype_id)]
    assert times == sorted(times, reverse=True)


def test_feedback_set_and_clear(store, style_me):
    prototype_id, version_id, inputs, outputs = _sample_run(store, style_me)
    tc = store.record_test_case(prototype_id, version_id, inputs, outputs)
    updated = store.set_feedback(tc.test_case_id, "outfit ignored the weather")
    assert updated.feedback == "outfit ignored the weather"
    cleared = store.set_feedback(tc.test_case_id, None)
    assert cleared.feedback is None


def test_feedback_unknown_case(store):
    with pytest.raises(NotFoundError):
        store.set_feedback("tc-missing", "x")


# ---------------------------------------------------------------------------
# suggested revisions


def test_revision_lifecycle_apply(store, style_me):
    prototype_id, v1, inputs, outputs = _sample_run(store, style_me)
    tc = store.record_test_case(prototype_id, v1, inputs, outputs,
                                feedback="too long")
    revised = _revised(style_me)
    revision = store.submit_revision(
        prototype_id, v1, "shorten it", revised, ["Shortened the reply"],
        latest_test_case_id=tc.test_case_id,
    )
    assert revision.status is RevisionStatus.PENDING
    assert revision.latest_test_case_id == tc.test_case_id

    new_version = store.apply_revision(prototype_id, revision.revision_id)
    stored = store.get_prototype(prototype_id)
    assert stored.head.version_id == new_version
    assert stored.head.spec == revised
    assert stored.head.origin is VersionOrigin.REVISION_APPLIED
    assert store.get_revision(revision.revision_id).status is RevisionStatus.APPLIED


def test_revision_lifecycle_reject(store, style_me):
    prototype_id, v1, _, _ = _sample_run(store, style_me)
    revision = store.submit_revision(prototype_id, v1, "x", _revised(style_me), ["s"])
    store.reject_revision(revision.revision_id)
    assert store.get_revision(revision.revision_id).status is RevisionStatus.REJECTED
    # History unchanged.
    assert len(store.get_prototype(prototype_id).versions) == 1


@pytest.mark.parametrize("first", ["apply", "reject"])
@pytest.mark.parametrize("second", ["apply", "reject"])
def test_revision_decided_once(store, style_me, first, second):
    prototype_id, v1, _, _ = _sample_run(store, style_me)
    revision = store.submit_revision(prototype_id, v1, "x", _revised(style_me), ["s"])
    if first == "apply":
        store.apply_revision(prototype_id, revision.revision_id)
    else:
        store.reject_revision(revision.revision_id)
    with pytest.raises(AlreadyDecidedError):
        if second == "apply":
            store.apply_revision(prototype_id, revision.revision_id)
        else:
            store.reject_revision(revision.revision_id)


def test_submit_revision_checks_references(store, style_me):
    prototype_id, v1, _, _ = _sample_run(store, style_me)
    with pytest.raises(NotFoundError):
        store.submit_revision(prototype_id, "v-missing", "x", _revised(style_me), [])
    with pytest.raises(NotFoundError):
        store.submit_revision(prototype_id, v1, "x", _revised(style_me), [],
                              latest_test_case_id="tc-missing")


def test_apply_revision_wrong_prototype(store, style_me):
    prototype_id, v1, _, _ = _sample_run(store, style_me)
    other_id, _, _ = store.save_prototype(style_me)
    revision = store.submit_revision(prototype_id, v1, "x", _revised(style_me), ["s"])
    with pytest.raises(NotFoundError):
        store.apply_revision(other_id, revision.revision_id)


def test_list_revisions(store, style_me):
    prototype_id, v1, _, _ = _sample_run(store, style_me)
    ids = {store.submit_revision(prototype_id, v1, f"r{i}",
                                 _revised(style_me, f" v{i}"), [f"s{i}"]).revision_id
           for i in range(3)}
    assert {r.revision_id for r in store.list_revisions(prototype_id)} == ids


# ---------------------------------------------------------------------------
# blobs


def test_blob_round_trip(tmp_path):
    blobs = BlobStore(tmp_path / "blobs")
    data = b"\x89PNG fake image bytes"
    blob_id = blobs.put(data)
    assert len(blob_id) == 64
    assert blobs.get(blob_id) == data
    assert blobs.exists(blob_id)


def test_blob_content_addressing_dedupes(tmp_path):
    blobs = BlobStore(tmp_path / "blobs")
    assert blobs.put(b"same") == blobs.put(b"same")
    assert blobs.put(b"same") != blobs.put(b"different")


def test_blob_rejects_path_traversal(tmp_path):
    blobs = BlobStore(tmp_path / "blobs")
    (tmp_path / "secret.txt").write_text("s")
    with pytest.raises(NotFoundError):
        blobs.get("../secret.txt")
    with pytest.raises(NotFoundError):
        blobs.get("missing" * 8)


def test_store_owns_a_blob_dir(tmp_path, style_me):
    store = SessionStore(tmp_path / "sessions.db")
    try:
        blob_id = store.blobs.put(b"img")
        assert (tmp_path / "sessions-blobs" / blob_id).exists()
    finally:
        store.close()


# ---------------------------------------------------------------------------
# export


def test_export_bundle_contents(store, style_me, tmp_path):
    prototype_id, v1, inputs, outputs = _sample_run(store, style_me)
    tc = store.record_test_case(prototype_id, v1, inputs, outputs, feedback="ok")
    revision = store.submit_revision(prototype_id, v1, "req", _revised(style_me), ["s"])
    v2 = store.apply_revision(prototype_id, revision.revision_id)

    path = store.export_bundle(prototype_id, tmp_path / "bundle.zip")
    with zipfile.ZipFile(path) as archive:
        names = set(archive.namelist())
        assert {"head.json", "testcases.json", "revisions.json"} <= names
        assert f"versions/{v1}.json" in names
        assert f"versions/{v2}.json" in names
        head = parse_spec(archive.read("head.json").decode("utf-8"), strict=False)
        assert head == _revised(style_me)
        cases = json.loads(archive.read("testcases.json"))
        assert cases[0]["testCaseId"] == tc.test_case_id
        assert cases[0]["feedback"] == "ok"
        revs = json.loads(archive.read("revisions.json"))
        assert revs[0]["status"] == "APPLIED"
        assert revs[0]["summaryOfChanges"] == ["s"]


# ---------------------------------------------------------------------------
# concurrency


def test_concurrent_version_appends_single_winner(store, style_me):
    prototype_id, v1, _ = store.save_prototype(style_me)
    results = []

    def worker(i):
        try:
            results.append(("ok", store.add_version(
                prototype_id, _revised(style_me, f" c{i}"), VersionOrigin.MANUAL, v1)))
        except VersionConflictError:
            results.append(("conflict", None))

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    wins = [r for r in results if r[0] == "ok"]
    assert len(wins) == 1
    assert len(store.get_prototype(prototype_id).versions) == 2


def test_concurrent_test_case_recording(store, style_me):
    prototype_id, version_id, inputs, outputs = _sample_run(store, style_me)

    def worker():
        store.record_test_case(prototype_id, version_id, inputs, outputs)

    threads = [threading.Thread(target=worker) for _ in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(store.list_test_cases(prototype_id)) == 16


def test_concurrent_revision_decision_single_winner(store, style_me):
    prototype_id, v1, _, _ = _sample_run(store, style_me)
    revision = store.submit_revision(prototype_id, v1, "x", _revised(style_me), ["s"])
    outcomes = []

    def decide(action):
        try:
            if action == "apply":
                store.apply_revision(prototype_id, revision.revision_id)
            else:
                store.reject_revision(revision.revision_id)
            outcomes.append(action)
        except AlreadyDecidedError:
            pass

    threads = [threading.Thread(target=decide, args=(a,))
               for a in ["apply", "reject"] * 4]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(outcomes) == 1
    final = store.get_revision(revision.revision_id).status
    assert final.value == {"apply": "APPLIED", "reject": "REJECTED"}[outcomes[0]]
