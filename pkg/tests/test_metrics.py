from __future__ import annotations

import json
import logging
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from slsmigrate.metrics import (
    EndpointSet,
    MetricsError,
    TestResult,
    anti_pattern_count,
    api_f1,
    api_f1_many,
    e2epr,
    endpoints_from_report,
    f1_score,
    load_endpoints,
    load_results,
    normalize_path,
    score,
)

R4 = [("GET", "/items"), ("POST", "/items"), ("GET", "/items/{id}"), ("DELETE", "/items/{id}")]
AUTH = ["/register", "/login", "/logout"]


def eps(pairs, source="generated"):
    return EndpointSet.of(pairs, source)


def oracle_f1(g: set, r: set) -> Fraction:
    """Exact F1 by counting shared endpoints one at a time."""
    tp = 0
    for e in g:
        for f in r:
            if e == f:
                tp += 1
    if tp == 0:
        return Fraction(0)
    p, rec = Fraction(tp, len(g)), Fraction(tp, len(r))
    return 2 * p * rec / (p + rec)


def test_identity_gives_one():
    assert api_f1(eps(R4), eps(R4, "reference")).f1 == 1.0


def test_redundant_login_example():
    s = api_f1(eps(R4 + [("POST", "/login")]), eps(R4, "reference"))
    assert s.precision == pytest.approx(0.8, abs=1e-12)
    assert s.recall == 1.0
    assert abs(s.f1 - 8 / 9) < 1e-12


def test_empty_reference_is_error():
    with pytest.raises(MetricsError):
        api_f1(eps(R4), eps([], "reference"))


def test_unknown_source_is_error():
    with pytest.raises(MetricsError):
        EndpointSet.of(R4, "other")


def test_e2epr_examples():
    micro, macro, excluded = e2epr([TestResult("a", "core", 4, 2), TestResult("b", "core", 3, 3)])
    assert abs(micro - 5 / 7) < 1e-12 and abs(macro - 0.75) < 1e-12 and excluded == []
    assert e2epr([TestResult("a", "core", 10, 5)])[:2] == (0.5, 0.5)
    assert e2epr([TestResult("a", "core", 3, 3), TestResult("b", "robustness", 2, 2)])[:2] == (1.0, 1.0)


def test_e2epr_filters_categories_and_excludes_empty_apps(caplog):
    results = [
        TestResult("a", "core", 4, 2),
        TestResult("a", "auth", 10, 0),
        TestResult("b", "auth", 5, 5),
    ]
    with caplog.at_level(logging.WARNING):
        micro, macro, excluded = e2epr(results)
    assert (micro, macro, excluded) == (0.5, 0.5, ["b"])
    assert "b" in caplog.text
    with pytest.raises(MetricsError):
        e2epr([TestResult("b", "auth", 5, 5)])


def test_result_counts_are_checked():
    with pytest.raises(MetricsError):
        TestResult("a", "core", 2, 3)


def test_anti_pattern_count():
    g = eps(R4 + [("POST", "/login"), ("POST", "/register"), ("GET", "/extra")])
    r = eps(R4 + [("POST", "/register")], "reference")
    assert anti_pattern_count(g, r, AUTH) == 1


@pytest.mark.parametrize(
    ("raw", "norm"),
    [
        ("/todos/{todo_id}", "/todos/{}"),
        ("/todos/:id", "/todos/{}"),
        ("/todos/<id>", "/todos/{}"),
        ("/todos/<int:id>", "/todos/{}"),
        ("/todos/", "/todos"),
        ("/", "/"),
        ("/a/{x}/b/:y", "/a/{}/b/{}"),
    ],
)
def test_normalize_path(raw, norm):
    assert normalize_path(raw) == norm


def test_cross_framework_paths_match():
    g = eps([("get", "/books/:id")])
    r = eps([("GET", "/books/<int:book_id>")], "reference")
    assert api_f1(g, r).f1 == 1.0


def test_micro_and_macro_api_scores():
    a = (eps(R4 + [("POST", "/login")]), eps(R4, "reference"))
    b = (eps(R4[:1]), eps(R4[:2], "reference"))
    micro, macro = api_f1_many([a, b])
    assert micro.precision == pytest.approx(5 / 6) and micro.recall == pytest.approx(5 / 6)
    assert macro.f1 == pytest.approx((8 / 9 + 2 / 3) / 2)


def test_scorecard_and_loaders(tmp_path):
    report = {"entry_points": [{"method": m, "path": p} for m, p in R4 + [("POST", "/login")]]}
    (tmp_path / "r.json").write_text(json.dumps(report))
    (tmp_path / "g.json").write_text(json.dumps(["GET /items", {"method": "POST", "path": "/items"}]))
    (tmp_path / "t.json").write_text(json.dumps({"results": [{"app": "x", "category": "core", "total": 2, "passed": 1}]}))
    assert endpoints_from_report(report, AUTH) == R4
    r = eps(load_endpoints(tmp_path / "r.json", AUTH), "reference")
    g = eps(load_endpoints(tmp_path / "g.json"))
    card = score([("x", g, r)], load_results(tmp_path / "t.json"), AUTH)
    assert card.precision_micro == 1.0 and card.recall_micro == 0.5
    assert card.e2epr_micro == 0.5
    assert "precision" in card.table() and "e2epr" in card.table()


# -- properties ------------------------------------------------------------

methods = st.sampled_from(["GET", "POST", "PUT", "DELETE"])
paths = st.lists(st.sampled_from(["a", "b", "c", "{id}", ":x"]), min_size=1, max_size=3).map(
    lambda segs: "/" + "/".join(segs)
)
endpoints = st.tuples(methods, paths)


@given(st.sets(endpoints, max_size=12), st.sets(endpoints, min_size=1, max_size=12))
def test_property_matches_exact_oracle(g, r):
    gs, rs = eps(g), eps(r, "reference")
    assert abs(api_f1(gs, rs).f1 - float(oracle_f1(set(gs.endpoints), set(rs.endpoints)))) < 1e-12


@given(st.sets(endpoints, min_size=1, max_size=10), st.sets(endpoints, min_size=1, max_size=10), endpoints)
def test_property_extra_endpoint_lowers_precision(g, r, extra):
    gs, rs = eps(g), eps(r, "reference")
    new = eps([*g, extra])
    # with no match precision is already 0 and cannot drop further
    assume(not gs.endpoints.isdisjoint(rs.endpoints))
    assume(len(new) > len(gs) and not (new.endpoints - gs.endpoints) & rs.endpoints)
    before, after = api_f1(gs, rs), api_f1(new, rs)
    assert after.recall == before.recall
    assert after.precision < before.precision


@given(st.integers(1, 20), st.lists(st.integers(0, 20), min_size=1, max_size=8))
def test_property_equal_sizes_micro_equals_macro(total, passes):
    results = [TestResult(f"app{i}", "core", total, min(p, total)) for i, p in enumerate(passes)]
    micro, macro, _ = e2epr(results)
    assert micro == pytest.approx(macro, abs=1e-12)


@given(st.floats(0, 1), st.floats(0, 1))
def test_property_f1_symmetric_and_bounded(p, r):
    assert f1_score(p, r) == f1_score(r, p)
    assert 0.0 <= f1_score(p, r) <= 1.0 + 1e-12


@given(st.sets(endpoints, max_size=10), st.sets(endpoints, min_size=1, max_size=10))
def test_property_f1_zero_iff_no_match(g, r):
    gs, rs = eps(g), eps(r, "reference")
    assert (api_f1(gs, rs).f1 == 0) == gs.endpoints.isdisjoint(rs.endpoints)
