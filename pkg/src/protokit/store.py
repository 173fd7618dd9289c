"""Persistence for prototypes (versioned), blobs, test cases, and suggested
revisions; backs share-by-URL and the revision dashboard.

Storage is an embedded sqlite database plus a content-addressed blob
directory (one file per content hash). All operations are safe under
concurrent callers: writes are serialized through one connection-level lock,
and version appends use optimistic head tokens so racing revisions cannot
lose updates.
"""

from __future__ import annotations

import hashlib
import json
import secrets
import sqlite3
import threading
import uuid
import zipfile
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .model import PrototypeSpec, parse_spec, serialize_spec, validate_spec
from .prompting import InputValue, OutputResult


class StoreError(Exception):
    pass


class NotFoundError(StoreError):
    pass


class VersionConflictError(StoreError):
    def __init__(self, expected: str, actual: str):
        super().__init__(f"expected head version {expected}, but head is {actual}")
        self.expected = expected
        self.actual = actual


class AlreadyDecidedError(StoreError):
    pass


class InvalidSpecStoreError(StoreError):
    def __init__(self, violations):
        super().__init__("refusing to store invalid spec: "
                         + "; ".join(f"{v.code.value}@{v.path}" for v in violations))
        self.violations = violations


class VersionOrigin(str, Enum):
    MANUAL = "MANUAL"
    NL_CREATE = "NL_CREATE"
    NL_REVISE = "NL_REVISE"
    REVISION_APPLIED = "REVISION_APPLIED"


class RevisionStatus(str, Enum):
    PENDING = "PENDING"
    APPLIED = "APPLIED"
    REJECTED = "REJECTED"


@dataclass(frozen=True)
class SpecVersion:
    version_id: str
    spec: PrototypeSpec
    created_at: str
    origin: VersionOrigin


@dataclass(frozen=True)
class StoredPrototype:
    prototype_id: str
    share_token: str
    versions: tuple[SpecVersion, ...]

    @property
    def head(self) -> SpecVersion:
        return self.versions[-1]


@dataclass(frozen=True)
class TestCase:
    test_case_id: str
    prototype_id: str
    version_id: str
    inputs: tuple[InputValue, ...]
    outputs: tuple[OutputResult, ...]
    feedback: str | None = None
    created_at: str = ""


@dataclass(frozen=True)
class SuggestedRevision:
    revision_id: str
    prototype_id: str
    base_version_id: str
    request: str
    revised_spec: PrototypeSpec
    summary_of_changes: tuple[str, ...]
    latest_test_case_id: str | None = None
    status: RevisionStatus = RevisionStatus.PENDING
    created_at: str = ""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex}"


def _input_value_to_dict(value: InputValue) -> dict:
    out = {"inputId": value.input_id}
    if value.text is not None:
        out["text"] = value.text
    if value.image_ref is not None:
        out["imageRef"] = value.image_ref
    if value.selected_option is not None:
        out["selectedOption"] = value.selected_option
    return out


def _input_value_from_dict(raw: dict) -> InputValue:
    return InputValue(
        input_id=raw["inputId"],
        text=raw.get("text"),
        image_ref=raw.get("imageRef"),
        selected_option=raw.get("selectedOption"),
    )


def _output_result_to_dict(result: OutputResult) -> dict:
    return {
        "outputId": result.output_id,
        "text": result.text,
        "imageRef": result.image_ref,
        "rawModelText": result.raw_model_text,
    }


def _output_result_from_dict(raw: dict) -> OutputResult:
    return OutputResult(
        output_id=raw["outputId"],
        text=raw.get("text"),
        image_ref=raw.get("imageRef"),
        raw_model_text=raw.get("rawModelText"),
    )


class BlobStore:
    """Content-addressed blob directory: one file per sha256 hash."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes) -> str:
        blob_id = hashlib.sha256(data).hexdigest()
        path = self.root / blob_id
        if not path.exists():
            tmp = path.with_suffix(".tmp-" + uuid.uuid4().hex)
            tmp.write_bytes(data)
            tmp.rename(path)
        return blob_id

    def get(self, blob_id: str) -> bytes:
        path = self.root / blob_id
        if not path.exists() or "/" in blob_id or "." in blob_id:
            raise NotFoundError(f"no blob {blob_id}")
        return path.read_bytes()

    def exists(self, blob_id: str) -> bool:
        return (self.root / blob_id).exists()


_SCHEMA = """
CREATE TABLE IF NOT EXISTS prototypes (
    prototype_id TEXT PRIMARY KEY,
    share_token  TEXT UNIQUE NOT NULL,
    created_at   TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS versions (
    prototype_id TEXT NOT NULL,
    version_id   TEXT NOT NULL,
    seq          INTEGER NOT NULL,
    spec_text    TEXT NOT NULL,
    origin       TEXT NOT NULL,
    created_at   TEXT NOT NULL,
    PRIMARY KEY (prototype_id, version_id),
    UNIQUE (prototype_id, seq)
);
CREATE TABLE IF NOT EXISTS retired_tokens (
    share_token TEXT PRIMARY KEY
);
CREATE TABLE IF NOT EXISTS test_cases (
    test_case_id TEXT PRIMARY KEY,
    prototype_id TEXT NOT NULL,
    version_id   TEXT NOT NULL,
    inputs_json  TEXT NOT NULL,
    outputs_json TEXT NOT NULL,
    feedback     TEXT,
    created_at   TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS revisions (
    revision_id       TEXT PRIMARY KEY,
    prototype_id      TEXT NOT NULL,
    base_version_id   TEXT NOT NULL,
    request           TEXT NOT NULL,
    revised_spec_text TEXT NOT NULL,
    summary_json      TEXT NOT NULL,
    test_case_id      TEXT,
    status            TEXT NOT NULL,
    created_at        TEXT NOT NULL
);
"""


class SessionStore:
    """Embedded single-node store; every spec is re-validated at write time."""

    def __init__(self, db_path: str | Path, blob_dir: str | Path | None = None):
        self.db_path = Path(db_path)
        if blob_dir is None:
            blob_dir = self.db_path.parent / (self.db_path.stem + "-blobs")
        self.blobs = BlobStore(blob_dir)
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(self.db_path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- prototypes ---------------------------------------------------------

    def _check_spec(self, spec: PrototypeSpec) -> str:
        violations = validate_spec(spec)
        if violations:
            raise InvalidSpecStoreError(violations)
        return serialize_spec(spec)

    def _fresh_token(self) -> str:
        # >= 128 bits; never reuse a token that was ever retired.
        while True:
            token = secrets.token_urlsafe(16)
            retired = self._conn.execute(
                "SELECT 1 FROM retired_tokens WHERE share_token = ?", (token,)
            ).fetchone()
            active = self._conn.execute(
                "SELECT 1 FROM prototypes WHERE share_token = ?", (token,)
            ).fetchone()
            if retired is None and active is None:
                return token

    def save_prototype(
        self, spec: PrototypeSpec, origin: VersionOrigin = VersionOrigin.MANUAL
    ) -> tuple[str, str, str]:
        spec_text = self._check_spec(spec)
        with self._lock, self._conn:
            prototype_id = _new_id("proto")
            version_id = _new_id("v")
            token = self._fresh_token()
            now = _now()
            self._conn.execute(
                "INSERT INTO prototypes VALUES (?, ?, ?)", (prototype_id, token, now)
            )
            self._conn.execute(
                "INSERT INTO versions VALUES (?, ?, 1, ?, ?, ?)",
                (prototype_id, version_id, spec_text, origin.value, now),
            )
        return prototype_id, version_id, token

    def add_version(
        self,
        prototype_id: str,
        spec: PrototypeSpec,
        origin: VersionOrigin,
        expected_head_version: str,
    ) -> str:
        spec_text = self._check_spec(spec)
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT version_id, seq FROM versions WHERE prototype_id = ? "
                "ORDER BY seq DESC LIMIT 1",
                (prototype_id,),
            ).fetchone()
            if row is None:
                raise NotFoundError(f"no prototype {prototype_id}")
            head_id, head_seq = row
            if head_id != expected_head_version:
                raise VersionConflictError(expected_head_version, head_id)
            version_id = _new_id("v")
            self._conn.execute(
                "INSERT INTO versions VALUES (?, ?, ?, ?, ?, ?)",
                (prototype_id, version_id, head_seq + 1, spec_text, origin.value, _now()),
            )
        return version_id

    def get_prototype(self, prototype_id: str) -> StoredPrototype:
        with self._lock:
            row = self._conn.execute(
                "SELECT share_token FROM prototypes WHERE prototype_id = ?",
                (prototype_id,),
            ).fetchone()
            if row is None:
                raise NotFoundError(f"no prototype {prototype_id}")
            versions = self._conn.execute(
                "SELECT version_id, spec_text, origin, created_at FROM versions "
                "WHERE prototype_id = ? ORDER BY seq",
                (prototype_id,),
            ).fetchall()
        return StoredPrototype(
            prototype_id=prototype_id,
            share_token=row[0],
            versions=tuple(
                SpecVersion(
                    version_id=vid,
                    spec=parse_spec(text, strict=False),
                    created_at=created,
                    origin=VersionOrigin(origin),
                )
                for vid, text, origin, created in versions
            ),
        )

    def get_by_share_token(self, token: str) -> tuple[str, PrototypeSpec]:
        with self._lock:
            row = self._conn.execute(
                "SELECT prototype_id FROM prototypes WHERE share_token = ?", (token,)
            ).fetchone()
        if row is None:
            raise NotFoundError("unknown share token")
        stored = self.get_prototype(row[0])
        return stored.prototype_id, stored.head.spec

    def delete_prototype(self, prototype_id: str) -> None:
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT share_token FROM prototypes WHERE prototype_id = ?",
                (prototype_id,),
            ).fetchone()
            if row is None:
                raise NotFoundError(f"no prototype {prototype_id}")
            self._conn.execute(
                "INSERT OR IGNORE INTO retired_tokens VALUES (?)", (row[0],)
            )
            for table in ("versions", "test_cases", "revisions"):
                self._conn.execute(
                    f"DELETE FROM {table} WHERE prototype_id = ?", (prototype_id,)
                )
            self._conn.execute(
                "DELETE FROM prototypes WHERE prototype_id = ?", (prototype_id,)
            )

    # -- test cases ---------------------------------------------------------

    def record_test_case(
        self,
        prototype_id: str,
        version_id: str,
        inputs: list[InputValue],
        outputs: list[OutputResult],
        feedback: str | None = None,
    ) -> TestCase:
        with self._lock, self._conn:
            exists = self._conn.execute(
                "SELECT 1 FROM versions WHERE prototype_id = ? AND version_id = ?",
                (prototype_id, version_id),
            ).fetchone()
            if exists is None:
                raise NotFoundError(f"no version {version_id} under {prototype_id}")
            test_case = TestCase(
                test_case_id=_new_id("tc"),
                prototype_id=prototype_id,
                version_id=version_id,
                inputs=tuple(inputs),
                outputs=tuple(outputs),
                feedback=feedback,
                created_at=_now(),
            )
            self._conn.execute(
                "INSERT INTO test_cases VALUES (?, ?, ?, ?, ?, ?, ?)",
                (
                    test_case.test_case_id,
                    prototype_id,
                    version_id,
                    json.dumps([_input_value_to_dict(v) for v in inputs]),
                    json.dumps([_output_result_to_dict(r) for r in outputs]),
                    feedback,
                    test_case.created_at,
                ),
            )
        return test_case

    def _row_to_test_case(self, row) -> TestCase:
        tc_id, proto_id, version_id, inputs_json, outputs_json, feedback, created = row
        return TestCase(
            test_case_id=tc_id,
            prototype_id=proto_id,
            version_id=version_id,
            inputs=tuple(_input_value_from_dict(v) for v in json.loads(inputs_json)),
            outputs=tuple(_output_result_from_dict(r) for r in json.loads(outputs_json)),
            feedback=feedback,
            created_at=created,
        )

    def get_test_case(self, test_case_id: str) -> TestCase:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM test_cases WHERE test_case_id = ?", (test_case_id,)
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no test case {test_case_id}")
        return self._row_to_test_case(row)

    def list_test_cases(self, prototype_id: str) -> list[TestCase]:
        with self._lock:
            self._require_prototype(prototype_id)
            rows = self._conn.execute(
                "SELECT * FROM test_cases WHERE prototype_id = ? "
                "ORDER BY created_at DESC, test_case_id",
                (prototype_id,),
            ).fetchall()
        return [self._row_to_test_case(row) for row in rows]

    def set_feedback(self, test_case_id: str, feedback: str | None) -> TestCase:
        with self._lock, self._conn:
            updated = self._conn.execute(
                "UPDATE test_cases SET feedback = ? WHERE test_case_id = ?",
                (feedback, test_case_id),
            )
            if updated.rowcount == 0:
                raise NotFoundError(f"no test case {test_case_id}")
        return self.get_test_case(test_case_id)

    # -- suggested revisions ------------------------------------------------

    def submit_revision(
        self,
        prototype_id: str,
        base_version_id: str,
        request: str,
        revised_spec: PrototypeSpec,
        summary_of_changes: list[str],
        latest_test_case_id: str | None = None,
    ) -> SuggestedRevision:
        spec_text = self._check_spec(revised_spec)
        with self._lock, self._conn:
            exists = self._conn.execute(
                "SELECT 1 FROM versions WHERE prototype_id = ? AND version_id = ?",
                (prototype_id, base_version_id),
            ).fetchone()
            if exists is None:
                raise NotFoundError(f"no version {base_version_id} under {prototype_id}")
            if latest_test_case_id is not None:
                tc = self._conn.execute(
                    "SELECT 1 FROM test_cases WHERE test_case_id = ?",
                    (latest_test_case_id,),
                ).fetchone()
                if tc is None:
                    raise NotFoundError(f"no test case {latest_test_case_id}")
            revision = SuggestedRevision(
                revision_id=_new_id("rev"),
                prototype_id=prototype_id,
                base_version_id=base_version_id,
                request=request,
                revised_spec=revised_spec,
                summary_of_changes=tuple(summary_of_changes),
                latest_test_case_id=latest_test_case_id,
                status=RevisionStatus.PENDING,
                created_at=_now(),
            )
            self._conn.execute(
                "INSERT INTO revisions VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    revision.revision_id,
                    prototype_id,
                    base_version_id,
                    request,
                    spec_text,
                    json.dumps(list(summary_of_changes)),
                    latest_test_case_id,
                    RevisionStatus.PENDING.value,
                    revision.created_at,
                ),
            )
        return revision

    def _row_to_revision(self, row) -> SuggestedRevision:
        (rev_id, proto_id, base_vid, request, spec_text, summary_json,
         tc_id, status, created) = row
        return SuggestedRevision(
            revision_id=rev_id,
            prototype_id=proto_id,
            base_version_id=base_vid,
            request=request,
            revised_spec=parse_spec(spec_text, strict=False),
            summary_of_changes=tuple(json.loads(summary_json)),
            latest_test_case_id=tc_id,
            status=RevisionStatus(status),
            created_at=created,
        )

    def get_revision(self, revision_id: str) -> SuggestedRevision:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM revisions WHERE revision_id = ?", (revision_id,)
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no revision {revision_id}")
        return self._row_to_revision(row)

    def list_revisions(self, prototype_id: str) -> list[SuggestedRevision]:
        with self._lock:
            self._require_prototype(prototype_id)
            rows = self._conn.execute(
                "SELECT * FROM revisions WHERE prototype_id = ? "
                "ORDER BY created_at DESC, revision_id",
                (prototype_id,),
            ).fetchall()
        return [self._row_to_revision(row) for row in rows]

    def apply_revision(self, prototype_id: str, revision_id: str) -> str:
        """Create a new head version from the revision and mark it APPLIED.

        The associated test case stays linked so the dashboard can populate
        its preview.
        """
        with self._lock:
            revision = self.get_revision(revision_id)
            if revision.prototype_id != prototype_id:
                raise NotFoundError(f"revision {revision_id} is not under {prototype_id}")
            if revision.status is not RevisionStatus.PENDING:
                raise AlreadyDecidedError(f"revision already {revision.status.value}")
            head = self.get_prototype(prototype_id).head
            version_id = self.add_version(
                prototype_id, revision.revised_spec,
                VersionOrigin.REVISION_APPLIED, head.version_id,
            )
            with self._conn:
                self._conn.execute(
                    "UPDATE revisions SET status = ? WHERE revision_id = ?",
                    (RevisionStatus.APPLIED.value, revision_id),
                )
        return version_id

    def reject_revision(self, revision_id: str) -> None:
        with self._lock, self._conn:
            revision = self.get_revision(revision_id)
            if revision.status is not RevisionStatus.PENDING:
                raise AlreadyDecidedError(f"revision already {revision.status.value}")
            self._conn.execute(
                "UPDATE revisions SET status = ? WHERE revision_id = ?",
                (RevisionStatus.REJECTED.value, revision_id),
            )

    # -- export -------------------------------------------------------------

    def export_bundle(self, prototype_id: str, archive_path: str | Path) -> Path:
        """Prototype bundle (head + all versions + test cases + revisions)
        as a single zip for designer hand-off."""
        stored = self.get_prototype(prototype_id)
        test_cases = self.list_test_cases(prototype_id)
        revisions = self.list_revisions(prototype_id)
        archive_path = Path(archive_path)
        with zipfile.ZipFile(archive_path, "w", zipfile.ZIP_DEFLATED) as archive:
            archive.writestr("head.json", serialize_spec(stored.head.spec))
            for version in stored.versions:
                archive.writestr(
                    f"versions/{version.version_id}.json", serialize_spec(version.spec)
                )
            archive.writestr("testcases.json", json.dumps([
                {
                    "testCaseId": tc.test_case_id,
                    "versionId": tc.version_id,
                    "inputs": [_input_value_to_dict(v) for v in tc.inputs],
                    "outputs": [_output_result_to_dict(r) for r in tc.outputs],
                    "feedback": tc.feedback,
                    "createdAt": tc.created_at,
                }
                for tc in test_cases
            ], indent=2))
            archive.writestr("revisions.json", json.dumps([
                {
                    "revisionId": rev.revision_id,
                    "baseVersionId": rev.base_version_id,
                    "request": rev.request,
                    "revisedSpec": json.loads(serialize_spec(rev.revised_spec)),
                    "summaryOfChanges": list(rev.summary_of_changes),
                    "latestTestCaseId": rev.latest_test_case_id,
                    "status": rev.status.value,
                    "createdAt": rev.created_at,
                }
                for rev in revisions
            ], indent=2))
        return archive_path

    def _require_prototype(self, prototype_id: str) -> None:
        row = self._conn.execute(
            "SELECT 1 FROM prototypes WHERE prototype_id = ?", (prototype_id,)
        ).fetchone()
        if row is None:
            raise NotFoundError(f"no prototype {prototype_id}")
