import json
from pathlib import Path

import pytest

from protokit.gateway import CallableGateway, ModelResponse, RecordingGateway, ReplayGateway
from protokit.model import parse_spec

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"

GOLDEN_NAMES = [
    "style_me",
    "hogwarts_sorting_hat",
    "furniture_placer",
    "style_me_revised",
    "furniture_travel_revised",
]


def golden_text(name: str) -> str:
    return (GOLDEN / f"{name}.json").read_text(encoding="utf-8")


def golden_spec(name: str):
    return parse_spec(golden_text(name))


def golden_dict(name: str) -> dict:
    return json.loads(golden_text(name))


@pytest.fixture
def style_me():
    return golden_spec("style_me")


@pytest.fixture
def style_me_base():
    return golden_spec("style_me_base")


@pytest.fixture
def style_me_revised():
    return golden_spec("style_me_revised")


def scripted_gateway(responder):
    """Gateway backed by a plain function of the request."""
    return CallableGateway(responder)


def record_then_replay(tmp_path, responder, run, name="transcript.txt"):
    """Run a pipeline once against a recording gateway, then return the
    replay gateway over the captured transcript (plus its path)."""
    path = tmp_path / name
    recorder = RecordingGateway(CallableGateway(responder), path)
    run(recorder)
    return ReplayGateway(path), path


def text_response(text: str) -> ModelResponse:
    return ModelResponse(text=text, backend_id="scripted")


ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
