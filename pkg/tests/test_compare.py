from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlviz.compare import (
    CompareVerdict,
    VectorPair,
    canonicalize_label,
    compare,
    default_aliases,
    evaluate_vectors,
    load_alias_table,
    normalize,
    query_requests_ordering,
    round_5dp,
    zero_fill,
)

WEEKDAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]
MONTHS = [
    "January", "February", "March", "April", "May", "June", "July",
    "August", "September", "October", "November", "December",
]


# -- calendar canonicalization -------------------------------------------------

def test_alias_table_covers_three_forms_per_unit():
    # Each of the 7 weekdays and 12 months must canonicalize from its
    # 3-letter form, its listed mid-length form, and its lowercase full form.
    aliases = default_aliases()
    inverted: dict[str, set[str]] = {}
    for alias, canonical in aliases.items():
        inverted.setdefault(canonical, set()).add(alias)
    for unit in WEEKDAYS + MONTHS:
        forms = inverted[unit]
        assert unit[:3].lower() in forms, f"{unit}: 3-letter form missing"
        assert unit.lower() in forms, f"{unit}: lowercase full form missing"
        mid_forms = [f for f in forms if 3 <= len(f) <= 6]
        assert mid_forms, f"{unit}: mid-length form missing"
        for form in forms:
            assert canonicalize_label(form) == unit
            assert canonicalize_label(form.upper()) == unit
            assert canonicalize_label(form.capitalize()) == unit


@pytest.mark.parametrize("alias, canonical", [
    ("Tue", "Tuesday"), ("Tues", "Tuesday"), ("tuesday", "Tuesday"),
    ("Sept", "September"), ("Sep", "September"), ("september", "September"),
    ("THURS", "Thursday"), ("weds", "Wednesday"), ("mON", "Monday"),
])
def test_canonicalize_known_aliases(alias, canonical):
    assert canonicalize_label(alias) == canonical


def test_canonicalize_all_units_all_cases():
    aliases = default_aliases()
    for alias, canonical in aliases.items():
        for variant in (alias, alias.upper(), alias.capitalize()):
            assert canonicalize_label(variant) == canonical


def test_canonicalize_leaves_other_values_alone():
    assert canonicalize_label("Tuesdayish") == "Tuesdayish"
    assert canonicalize_label(42) == 42
    assert canonicalize_label("north") == "north"


def test_alias_table_is_a_data_file(tmp_path):
    custom = tmp_path / "aliases.txt"
    custom.write_text("Quarter1 Q1 q one\n", encoding="utf-8")
    table = load_alias_table(custom)
    assert table["q1"] == "Quarter1"
    assert table["quarter1"] == "Quarter1"


# -- rounding -------------------------------------------------------------------

@pytest.mark.parametrize("value, expected", [
    (1.000004, 1.0),
    (1.000005, 1.00001),       # half rounds away from zero
    (-1.000005, -1.00001),
    (1.0000049, 1.0),
    (2, 2.0),
    (0.123456789, 0.12346),
    (-0.000004, -0.0),
])
def test_round_5dp_cases(value, expected):
    assert round_5dp(value) == expected


def test_round_5dp_idempotent_samples():
    rng = random.Random(7)
    for _ in range(2000):
        v = rng.uniform(-1e4, 1e4)
        assert round_5dp(round_5dp(v)) == round_5dp(v)


def test_values_differing_by_more_than_1e5_never_equal():
    rng = random.Random(11)
    for _ in range(2000):
        a = rng.uniform(-100, 100)
        delta = rng.uniform(1.0001e-5, 5e-3)
        b = a + delta if rng.random() < 0.5 else a - delta
        assert round_5dp(a) != round_5dp(b), (a, b)


def test_same_rounding_bucket_always_equal():
    # Values that agree after rounding keep comparing equal through normalize.
    rng = random.Random(13)
    for _ in range(1000):
        base = round(rng.uniform(-50, 50), 5)
        a = base + rng.uniform(-0.49e-5, 0.49e-5)
        assert round_5dp(a) == round_5dp(base)


# -- sort gating ----------------------------------------------------------------

@pytest.mark.parametrize("query, fires", [
    ("Plot the outcome.", True),
    ("Sort the bars by height.", False),
    ("ORDER the results please", False),
    ("Preorder totals by month", False),   # substring match, per methodology
    ("Show me a SORTED view", False),
    ("plot values in any arrangement", True),
    ("", True),
])
def test_sort_rule_gating(query, fires):
    assert query_requests_ordering(query) is (not fires)
    pair = VectorPair(x=("b", "a"), y=(2, 1))
    normalized = normalize(pair, query)
    if fires:
        assert normalized.x == ("a", "b")
        assert normalized.y == (1.0, 2.0)
    else:
        assert normalized.x == ("b", "a")
        assert normalized.y == (2.0, 1.0)


def test_sort_ties_break_by_x_ascending():
    pair = VectorPair(x=("c", "a", "b"), y=(1, 1, 1))
    normalized = normalize(pair, "plot it")
    assert normalized.x == ("a", "b", "c")


def test_normalize_spec_examples():
    assert normalize(VectorPair(x=("Tues",), y=(3,)), "anything").x == ("Tuesday",)
    assert normalize(VectorPair(x=("Tues",), y=(3,)), "anything").y == (3.0,)
    assert normalize(VectorPair(x=(1,), y=(1.000004,)), "x").y == (1.0,)


# -- compare --------------------------------------------------------------------

def test_compare_identical_pairs_match():
    a = VectorPair(x=("a", "b"), y=(1.0, 2.0))
    assert compare(a, a).result == "Match"


def test_compare_length_mismatch_reports_divergence():
    a = VectorPair(x=("a", "b"), y=(1.0, 0.0))
    b = VectorPair(x=("a",), y=(1.0,))
    verdict = compare(a, b)
    assert verdict.result == "Mismatch"
    assert verdict.diff.index == 1


def test_compare_zero_valued_categories_mismatch_by_default():
    # Reference lists empty categories with y=0; generated side omits them.
    reference = VectorPair(x=("Mon", "Tue", "Wed"), y=(0.0, 2.0, 5.0))
    generated = VectorPair(x=("Tue", "Wed"), y=(2.0, 5.0))
    query = "visits per weekday"
    verdict = evaluate_vectors(generated, reference, query)
    assert verdict.result == "Mismatch"
    # The opt-in zero-fill mode closes exactly this gap.
    verdict2 = evaluate_vectors(generated, reference, query, zero_fill_mode=True)
    assert verdict2.result == "Match"


def test_compare_number_vs_text_never_equal():
    a = VectorPair(x=(1,), y=(1,))
    b = VectorPair(x=("1",), y=(1,))
    assert compare(normalize(a, "q"), normalize(b, "q")).result == "Mismatch"


def test_tied_y_different_x_order_mismatch_when_query_orders():
    # Query contains "order", so vectors stay as produced; tie order differs.
    query = "order the bars from high to low"
    a = VectorPair(x=("q", "p", "r"), y=(1.0, 1.0, 1.0))
    b = VectorPair(x=("p", "q", "r"), y=(1.0, 1.0, 1.0))
    assert evaluate_vectors(a, b, query).result == "Mismatch"
    assert evaluate_vectors(a, b, query, multiset_ties=True).result == "Match"


def test_multiset_ties_still_rejects_different_elements():
    query = "order by count"
    a = VectorPair(x=("p", "z"), y=(1.0, 1.0))
    b = VectorPair(x=("p", "q"), y=(1.0, 1.0))
    assert evaluate_vectors(a, b, query, multiset_ties=True).result == "Mismatch"


def test_zero_fill_inserts_only_zero_valued_categories():
    a = VectorPair(x=("a",), y=(1.0,))
    b = VectorPair(x=("a", "b", "c"), y=(1.0, 0.0, 2.0))
    fa, fb = zero_fill(a, b)
    assert set(fa.x) == {"a", "b"}     # "c" has data, so it is not invented
    assert fb == b


# -- property suite ---------------------------------------------------------------

_x_value = st.one_of(
    st.text(min_size=1, max_size=8,
            alphabet=st.characters(blacklist_categories=("Cs", "Cc"))),
    st.integers(min_value=-1000, max_value=1000),
    st.sampled_from(["Tue", "Sept", "monday", "Fri", "december"]),
)
_y_value = st.one_of(
    st.integers(min_value=-10**6, max_value=10**6),
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False),
)
_query = st.one_of(
    st.text(max_size=40),
    st.sampled_from([
        "Plot the outcome.",
        "sort by value",
        "order by the bars from high to low",
        "Show totals per month",
    ]),
)


@st.composite
def vector_pairs(draw):
    n = draw(st.integers(min_value=0, max_value=12))
    xs = tuple(draw(_x_value) for _ in range(n))
    ys = tuple(draw(_y_value) for _ in range(n))
    return VectorPair(x=xs, y=ys)


@settings(max_examples=400, deadline=None)
@given(pair=vector_pairs(), query=_query)
def test_normalize_idempotent(pair, query):
    once = normalize(pair, query)
    twice = normalize(once, query)
    assert once == twice


@settings(max_examples=300, deadline=None)
@given(pair=vector_pairs(), query=_query)
def test_compare_reflexive(pair, query):
    normalized = normalize(pair, query)
    assert compare(normalized, normalized).result == "Match"


@settings(max_examples=300, deadline=None)
@given(a=vector_pairs(), b=vector_pairs(), query=_query)
def test_compare_symmetric(a, b, query):
    na, nb = normalize(a, query), normalize(b, query)
    assert compare(na, nb).result == compare(nb, na).result


@settings(max_examples=200, deadline=None)
@given(pair=vector_pairs(), query=_query)
def test_sort_never_fires_when_query_orders(pair, query):
    if query_requests_ordering(query):
        normalized = normalize(pair, query)
        # Order preserved: canonicalization and rounding only.
        assert normalized.x == tuple(canonicalize_label(x) for x in pair.x)
        assert normalized.y == tuple(round_5dp(y) for y in pair.y)


def test_randomized_pairs_bulk():
    # Deterministic bulk sweep guaranteeing >=1,000 randomized pairs beyond
    # the hypothesis runs above.
    rng = random.Random(42)
    labels = ["Mon", "Tue", "Weds", "thursday", "north", "south", "east", "west"]
    for i in range(1200):
        n = rng.randrange(0, 10)
        xs = tuple(rng.choice(labels) + str(rng.randrange(3)) for _ in range(n))
        ys = tuple(rng.uniform(-100, 100) for _ in range(n))
        query = rng.choice(["Plot it.", "sort by y", "order please", "totals"])
        pair = VectorPair(x=xs, y=ys)
        once = normalize(pair, query)
        assert normalize(once, query) == once
        assert compare(once, once).result == "Match"
        shuffled = list(zip(xs, ys))
        rng.shuffle(shuffled)
        other = normalize(VectorPair(
            x=tuple(s[0] for s in shuffled), y=tuple(s[1] for s in shuffled)
        ), query)
        if not query_requests_ordering(query):
            # Ascending-y sort with x tie-break makes order canonical.
            assert compare(once, other).result == "Match"


def test_verdict_shape():
    verdict = compare(VectorPair(x=("a",), y=(1.0,)), VectorPair(x=("b",), y=(1.0,)))
    assert isinstance(verdict, CompareVerdict)
    assert verdict.diff.index == 0
    assert verdict.diff.left == "a"
    assert verdict.diff.right == "b"
