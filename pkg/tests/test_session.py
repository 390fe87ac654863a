from __future__ import annotations

import json

import pytest

from nlviz.errors import BadDataset, EmptyRefinement, NoBaseQuery, TooManyModels
from nlviz.gateway import CassetteStore, ModelSpec, ReplayProvider
from nlviz.sandbox import StubSandbox
from nlviz.session import SessionEngine

CS_MODELS = [
    ModelSpec("openai", "code-davinci-002", "completion"),
    ModelSpec("openai", "text-davinci-003", "completion"),
    ModelSpec("openai", "gpt-3.5-turbo", "chat"),
]
CROATIAN = "Promijenite naslov u 'Rezultati benchmarka'."


@pytest.fixture
def suite_dir(data_dir):
    return data_dir / "case_study_1"


@pytest.fixture
def engine(suite_dir, tmp_path) -> SessionEngine:
    return SessionEngine(
        datasets_dir=suite_dir / "datasets",
        provider=ReplayProvider(CassetteStore(suite_dir / "cassettes")),
        sandbox=StubSandbox(suite_dir / "stub_extracts"),
        state_dir=tmp_path / "state",
    )


def _play_case_study(engine) -> tuple[str, list]:
    session = engine.create_session("benchmark_results", CS_MODELS)
    turns = [engine.post_query(session.session_id, "Plot the outcome.")]
    for text in ("Summarise the results by difficulty.",
                 "Show a stacked bar chart.",
                 CROATIAN):
        turns.append(engine.refine_query(session.session_id, text))
    return session.session_id, turns


def test_create_session_validations(engine):
    with pytest.raises(BadDataset):
        engine.create_session("no_such_dataset", CS_MODELS[:1])
    with pytest.raises(TooManyModels):
        engine.create_session("benchmark_results", CS_MODELS + CS_MODELS[:1])
    with pytest.raises(TooManyModels):
        engine.create_session("benchmark_results", [])
    session = engine.create_session("benchmark_results", CS_MODELS[:1])
    assert session.turns == []
    assert session.chain.base_query == ""


def test_case_study_replay_four_turns(engine):
    _, turns = _play_case_study(engine)
    assert len(turns) == 4
    for turn in turns:
        assert set(turn.results) == {m.model_name for m in CS_MODELS}
        for result in turn.results.values():
            assert result.error is None
            assert result.chart is not None
            assert result.script
    assert turns[0].results["code-davinci-002"].chart.mark_kind == "bar"
    assert turns[2].results["gpt-3.5-turbo"].chart.mark_kind == "stacked-bar"
    assert turns[3].results["text-davinci-003"].chart.title == "Rezultati benchmarka"


def test_effective_query_law(engine):
    _, turns = _play_case_study(engine)
    assert turns[0].effective_query == "Plot the outcome."
    assert turns[1].effective_query == ("Plot the outcome. "
                                        "Summarise the results by difficulty.")
    assert turns[3].effective_query.endswith(CROATIAN)
    # Multilingual text is byte-preserved through the whole turn.
    assert CROATIAN.encode("utf-8") in turns[3].effective_query.encode("utf-8")


def test_refine_before_base_query(engine):
    session = engine.create_session("benchmark_results", CS_MODELS[:1])
    with pytest.raises(NoBaseQuery):
        engine.refine_query(session.session_id, "more")


def test_empty_refinement_rejected(engine):
    session = engine.create_session("benchmark_results", CS_MODELS[:1])
    engine.post_query(session.session_id, "Plot the outcome.")
    with pytest.raises(EmptyRefinement):
        engine.refine_query(session.session_id, "")


def test_replay_is_deterministic_across_engines(suite_dir, tmp_path):
    def run(state):
        engine = SessionEngine(
            datasets_dir=suite_dir / "datasets",
            provider=ReplayProvider(CassetteStore(suite_dir / "cassettes")),
            sandbox=StubSandbox(suite_dir / "stub_extracts"),
            state_dir=state,
        )
        _, turns = _play_case_study(engine)
        return [t.to_dict() for t in turns]

    first = run(tmp_path / "s1")
    second = run(tmp_path / "s2")
    assert first == second


def test_persistence_round_trip(engine, suite_dir, tmp_path):
    session_id, turns = _play_case_study(engine)
    state_file = engine.state_dir / f"{session_id}.jsonl"
    assert state_file.is_file()
    lines = state_file.read_text("utf-8").splitlines()
    assert len(lines) == 5  # header + 4 turns
    assert json.loads(lines[0])["dataset"] == "benchmark_results"

    fresh = SessionEngine(
        datasets_dir=suite_dir / "datasets",
        provider=ReplayProvider(CassetteStore(suite_dir / "cassettes")),
        sandbox=StubSandbox(suite_dir / "stub_extracts"),
        state_dir=tmp_path / "elsewhere",
    )
    restored = fresh.load_session_file(state_file)
    assert restored.session_id == session_id
    assert [t.to_dict() for t in restored.turns] == [t.to_dict() for t in turns]
    assert restored.chain.base_query == "Plot the outcome."
    assert len(restored.chain.refinements) == 3


def test_model_isolation_on_cassette_miss(suite_dir, tmp_path):
    # One model has no recording; the other two still deliver charts.
    engine = SessionEngine(
        datasets_dir=suite_dir / "datasets",
        provider=ReplayProvider(CassetteStore(suite_dir / "cassettes")),
        sandbox=StubSandbox(suite_dir / "stub_extracts"),
        state_dir=tmp_path,
    )
    models = CS_MODELS[:2] + [ModelSpec("openai", "unrecorded-model", "completion")]
    session = engine.create_session("benchmark_results", models)
    turn = engine.post_query(session.session_id, "Plot the outcome.")
    assert turn.results["unrecorded-model"].error is not None
    assert turn.results["code-davinci-002"].chart is not None
    assert turn.results["text-davinci-003"].chart is not None


def test_list_datasets(engine):
    assert engine.list_datasets() == ["benchmark_results"]
