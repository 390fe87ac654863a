"""Acceptance gate: one test per criterion, each printing a PASS line.

Headline live-model accuracy figures are encoded as reference constants
only (see REFERENCE_POINTS); they depend on paid, non-deterministic APIs
and are deliberately not CI assertions. Everything here runs offline.
"""

from __future__ import annotations

import base64
import json
import os
import random
import socket
import time
from contextlib import contextmanager

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlviz.bench.cases import extract_table_ref, load_nvbench_with_audit
from nlviz.bench.report import Outcome
from nlviz.bench.runner import EvalConfig, run_nlv_cascade, run_nvbench_suite
from nlviz.compare import (
    VectorPair,
    canonicalize_label,
    compare,
    default_aliases,
    normalize,
    query_requests_ordering,
    round_5dp,
)
from nlviz.errors import NoFromClause
from nlviz.gateway import (
    CassetteStore,
    Completion,
    ModelParams,
    ModelSpec,
    RecordingProvider,
    ReplayProvider,
    parse_model_spec,
    request_hash,
)
from nlviz.prompts import QueryChain, append_refinement, build_prompt, shape_request
from nlviz.sandbox import StubSandbox
from nlviz.session import SessionEngine
from nlviz.tabular import TableData, profile_columns

# Published single-run reference points; not reproducible deterministically.
REFERENCE_POINTS = {
    "nvbench_codex_match_rate": 0.43,
    "nvbench_full_run": {"Match": 1280, "Mismatch": 1387, "Error": 336},
    "cascade_cumulative_rates": [0.50, 0.63, 0.72],
}

PHRASES = {
    "french": ("Regroupez la difficulté par résultat sous forme de graphique à "
               "barres. l'axe des x est le résultat."),
    "croatian": "Promijenite naslov u 'Rezultati benchmarka'.",
    "te_reo": "Whakamahia nga tae whero, karaka, kākāriki, kikorangi.",
    "chinese": "按结果绘制条形图。",
}


@contextmanager
def no_network():
    real_socket = socket.socket

    def guarded(*args, **kwargs):
        raise AssertionError("network use during an offline acceptance run")

    socket.socket = guarded
    try:
        yield
    finally:
        socket.socket = real_socket


def _ok(name: str, detail: str = "") -> None:
    print(f"\nACCEPTANCE PASS: {name}" + (f" ({detail})" if detail else ""))


# -- criterion: nvBench filter fidelity --------------------------------------------

def test_filter_fidelity_bundled_fixture(data_dir):
    start = time.monotonic()
    result = load_nvbench_with_audit(data_dir / "nvbench_filter_fixture.json")
    elapsed = time.monotonic() - start
    manifest = json.loads((data_dir / "nvbench_filter_manifest.json").read_text("utf-8"))

    assert elapsed < 1.0
    assert result.total_seen == manifest["total"]
    assert len(result.cases) == manifest["kept"]
    assert {k: len(v) for k, v in result.exclusions.items()} == manifest["exclusions"]
    by_hardness: dict[str, int] = {}
    for case in result.cases:
        by_hardness[case.hardness] = by_hardness.get(case.hardness, 0) + 1
    assert by_hardness == manifest["kept_by_hardness"]
    assert len(result.databases) == manifest["kept_databases"]
    _ok("filter fidelity (bundled 20-spec fixture)", f"{elapsed:.3f}s")


@pytest.mark.skipif(
    not os.environ.get("NVBENCH_SPEC_FILE"),
    reason="full public benchmark file not provided (set NVBENCH_SPEC_FILE)",
)
def test_filter_fidelity_full_public_file():
    index = None
    index_path = os.environ.get("NVBENCH_HARDNESS_INDEX")
    if index_path:
        from nlviz.bench.cases import load_hardness_index
        index = load_hardness_index(index_path)
    start = time.monotonic()
    result = load_nvbench_with_audit(os.environ["NVBENCH_SPEC_FILE"], index)
    elapsed = time.monotonic() - start
    assert elapsed < 120
    assert len(result.cases) == 3003
    by_hardness: dict[str, int] = {}
    for case in result.cases:
        by_hardness[case.hardness] = by_hardness.get(case.hardness, 0) + 1
    assert by_hardness == {"easy": 812, "medium": 1572, "hard": 386,
                           "extra-hard": 233}
    assert len(result.databases) == 138
    _ok("filter fidelity (full public file)", f"{elapsed:.1f}s")


# -- criterion: comparison-oracle property suite -----------------------------------

def test_comparison_oracle_property_suite():
    start = time.monotonic()
    aliases = default_aliases()
    inverted: dict[str, set[str]] = {}
    for alias, canonical in aliases.items():
        inverted.setdefault(canonical, set()).add(alias)
    weekdays = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday",
                "Saturday", "Sunday"]
    months = ["January", "February", "March", "April", "May", "June", "July",
              "August", "September", "October", "November", "December"]
    checked_forms = 0
    for unit in weekdays + months:
        mid_candidates = sorted(f for f in inverted[unit]
                                if 4 <= len(f) <= 6 and f != unit.lower())
        mid = mid_candidates[0] if mid_candidates else unit.lower()
        # Three forms per unit: 3-letter, mid-length, lowercase full. For
        # May/June/July these collapse onto the name itself.
        for form in (unit[:3], mid, unit.lower()):
            assert canonicalize_label(form) == unit, (unit, form)
            assert canonicalize_label(form.upper()) == unit, (unit, form)
            assert canonicalize_label(form.lower()) == unit, (unit, form)
            checked_forms += 1
    assert checked_forms == (7 + 12) * 3

    # Sort gating on case-insensitive substrings.
    assert not query_requests_ordering("Plot the outcome.")
    for q in ("sort by height", "SORTED view", "order by count", "preORDER it"):
        assert query_requests_ordering(q)

    # 5dp rounding boundaries, half away from zero.
    assert round_5dp(1.000004) == 1.0
    assert round_5dp(1.000005) == 1.00001
    assert round_5dp(-1.000005) == -1.00001
    assert round_5dp(2) == 2.0

    rng = random.Random(90125)
    labels = ["Mon", "Tues", "weds", "thursday", "Sept", "october", "alpha",
              "beta", "gamma", "Ωmega"]
    pairs_checked = 0
    for _ in range(1100):
        n = rng.randrange(0, 12)
        xs = tuple(rng.choice(labels) + (str(rng.randrange(4)) if rng.random() < 0.5
                                         else "") for _ in range(n))
        ys = tuple(rng.uniform(-1e4, 1e4) for _ in range(n))
        query = rng.choice(["Plot it.", "sort it", "order by size", "", "总结结果"])
        pair = VectorPair(x=xs, y=ys)
        once = normalize(pair, query)
        # Idempotence.
        assert normalize(once, query) == once
        # Reflexivity.
        assert compare(once, once).result == "Match"
        # Symmetry against an independently shuffled pair.
        shuffled = list(zip(xs, ys))
        rng.shuffle(shuffled)
        other = normalize(VectorPair(x=tuple(s[0] for s in shuffled),
                                     y=tuple(s[1] for s in shuffled)), query)
        assert (compare(once, other).result == compare(other, once).result)
        # Values >1e-5 apart never collapse to equality.
        if n:
            bumped = normalize(VectorPair(
                x=xs, y=tuple(y + 2e-5 for y in ys)), query)
            if query_requests_ordering(query):
                assert compare(once, bumped).result == "Mismatch"
        pairs_checked += 1
    elapsed = time.monotonic() - start
    assert pairs_checked >= 1000
    assert elapsed < 30
    _ok("comparison-oracle property suite", f"{pairs_checked} pairs, {elapsed:.1f}s")


# -- criterion: replay end-to-end ---------------------------------------------------

def test_replay_end_to_end(data_dir):
    suite = data_dir / "replay_suite"
    manifest = json.loads((suite / "manifest.json").read_text("utf-8"))
    from nlviz.bench.cases import load_and_filter_nvbench

    start = time.monotonic()
    with no_network():
        cases = load_and_filter_nvbench(suite / "spec.json")
        config = EvalConfig(
            provider=ReplayProvider(CassetteStore(suite / "cassettes")),
            sandbox=StubSandbox(suite / "stub_extracts"),
            db_dir=suite / "dbs",
        )
        model = parse_model_spec(manifest["model"])
        first = run_nvbench_suite(cases, model, config)
        second = run_nvbench_suite(cases, model, config)
    elapsed = time.monotonic() - start

    assert elapsed < 180
    totals = first.totals
    assert totals["Match"] == manifest["totals"]["Match"] == 10
    assert totals["Mismatch"] == manifest["totals"]["Mismatch"] == 6
    assert totals["Error"] == manifest["totals"]["Error"] == 4
    assert totals["Match"] + totals["Mismatch"] + totals["Error"] == 20
    assert first.to_json() == second.to_json()

    by_id = {o.case_id: o for o in first.outcomes}
    for case_id, expected in manifest["expected"].items():
        assert by_id[case_id].result == expected["result"], case_id
        if expected["reason"]:
            assert by_id[case_id].reason == expected["reason"], case_id
    error_reasons = {by_id[c].reason for c in ("rs-e01", "rs-e02", "rs-e03")}
    assert error_reasons == {"runtime", "truncated-script", "timeout"}
    _ok("replay end-to-end (20 cassette-backed cases)",
        f"{totals['Match']}/{totals['Mismatch']}/{totals['Error']} in {elapsed:.1f}s")


# -- criterion: cascade logic ---------------------------------------------------------

def test_cascade_fixture_and_monotonicity(data_dir):
    from nlviz.bench.cases import load_nlv_corpus

    suite = data_dir / "nlv_suite"
    start = time.monotonic()
    cases, _ = load_nlv_corpus(suite / "corpus.csv", suite / "references.json")
    models = [ModelSpec("openai", "alpha-completion", "completion"),
              ModelSpec("openai", "beta-completion", "completion"),
              ModelSpec("openai", "gamma-chat", "chat")]
    config = EvalConfig(
        provider=ReplayProvider(CassetteStore(suite / "cassettes")),
        sandbox=StubSandbox(suite / "stub_extracts"),
        db_dir=suite / "data",
    )
    report = run_nlv_cascade(cases, models, config)
    rates = [stage["cumulative_rate"] for stage in report.stages]
    assert rates == [0.5, 0.7, 0.8]

    rng = random.Random(1)
    for _ in range(100):
        n_cases = rng.randrange(1, 12)
        n_stages = rng.randrange(1, 5)
        synth = [type(cases[0])(case_id=f"s{i}", db_id="d", vql="",
                                nl_queries=("q",)) for i in range(n_cases)]
        match_at = {c.case_id: rng.randrange(1, n_stages + 2) for c in synth}

        def runner(case, model, config, stage=None):
            if match_at[case.case_id] <= stage:
                return Outcome(case_id=case.case_id, result="Match", stage=stage)
            return Outcome(case_id=case.case_id, result="Mismatch",
                           reason="vector-mismatch", stage=stage)

        rep = run_nlv_cascade(synth, [ModelSpec("p", f"m{k}", "completion")
                                      for k in range(n_stages)],
                              EvalConfig(provider=None, sandbox=None),
                              case_runner=runner)
        cumulative = [s["cumulative_matches"] for s in rep.stages]
        assert cumulative == sorted(cumulative)
    elapsed = time.monotonic() - start
    assert elapsed < 10
    assert REFERENCE_POINTS["cascade_cumulative_rates"] == [0.50, 0.63, 0.72]
    _ok("cascade logic (fixture 50/70/80 + monotonicity over 100 fixtures)",
        f"{elapsed:.1f}s")


# -- criterion: VQL parsing -----------------------------------------------------------

def test_vql_parsing_corpus(data_dir):
    cases = json.loads((data_dir / "vql_cases.json").read_text("utf-8"))
    assert len(cases) == 50
    start = time.monotonic()
    for case in cases:
        if case["table"] is None:
            with pytest.raises(NoFromClause):
                extract_table_ref(case["vql"])
        else:
            table, kind = extract_table_ref(case["vql"])
            assert (table, kind) == (case["table"], case["chart_kind"]), case["vql"]
    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    _ok("VQL parsing (50-case corpus)", f"{elapsed:.3f}s")


# -- criterion: UTF-8 transparency ----------------------------------------------------

def _profile():
    table = TableData(name="results",
                      columns=("difficulty", "database", "outcome"),
                      rows=(("easy", "db1", "Match"),))
    return profile_columns(table)


def test_utf8_transparency_literals_and_persistence(data_dir, tmp_path):
    profile = _profile()
    model = ModelSpec("openai", "code-davinci-002", "completion")
    chat_model = ModelSpec("openai", "gpt-3.5-turbo", "chat")

    class Canned:
        def submit(self, request, spec):
            return Completion(text="plt.bar([], [])\n", finish_reason="stop")

    store = CassetteStore(tmp_path / "cassettes")
    recorder = RecordingProvider(Canned(), store)

    for name, phrase in PHRASES.items():
        raw = phrase.encode("utf-8")
        chain = append_refinement(QueryChain(base_query="Plot the outcome."), phrase)
        prompt = build_prompt(profile, chain)
        assert raw in prompt.description_part.encode("utf-8"), name
        for spec in (model, chat_model):
            request = shape_request(prompt, spec)
            recorder.submit(request, spec)
            record = store.load(request_hash(request, spec))
            stored = base64.b64decode(record["prompt_bytes"])
            if spec.mode == "chat":
                content = "".join(
                    m["content"] for m in json.loads(stored.decode("utf-8"))
                )
                assert raw in content.encode("utf-8"), name
            else:
                assert raw in stored, name

    # Session persistence keeps the bytes too.
    suite = data_dir / "case_study_1"
    engine = SessionEngine(
        datasets_dir=suite / "datasets",
        provider=ReplayProvider(CassetteStore(suite / "cassettes")),
        sandbox=StubSandbox(suite / "stub_extracts"),
        state_dir=tmp_path / "state",
    )
    session = engine.create_session("benchmark_results", [
        ModelSpec("openai", "code-davinci-002", "completion"),
        ModelSpec("openai", "text-davinci-003", "completion"),
        ModelSpec("openai", "gpt-3.5-turbo", "chat"),
    ])
    engine.post_query(session.session_id, "Plot the outcome.")
    engine.refine_query(session.session_id, "Summarise the results by difficulty.")
    engine.refine_query(session.session_id, "Show a stacked bar chart.")
    engine.refine_query(session.session_id, PHRASES["croatian"])
    state_file = engine.state_dir / f"{session.session_id}.jsonl"
    assert PHRASES["croatian"].encode("utf-8") in state_file.read_bytes()
    _ok("UTF-8 transparency (4 literal phrases through build/shape/persist)")


@settings(max_examples=200, deadline=None)
@given(query=st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=80,
))
def test_utf8_transparency_random_property(query):
    profile = _profile()
    chain = QueryChain(base_query=query)
    prompt = build_prompt(profile, chain)
    raw = query.encode("utf-8")
    assert raw in prompt.description_part.encode("utf-8")
    for spec in (ModelSpec("openai", "m", "completion"),
                 ModelSpec("openai", "m", "chat")):
        request = shape_request(prompt, spec)
        if spec.mode == "completion":
            assert raw in request.prompt_text.encode("utf-8")
        else:
            assert raw in "".join(m.content for m in request.messages).encode("utf-8")


def test_utf8_property_pass_line():
    _ok("UTF-8 transparency (random multilingual property)")
